#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "core/common.hpp"
#include "core/dense.hpp"

namespace bgn {

/// A logical row of a bit-packed {+1,-1} matrix: `words[0..ceil(cols/64))`
/// with bit 1 = +1 and bit 0 = -1, padding bits beyond `cols` zero.
struct BitRowView {
  const std::uint64_t* words = nullptr;
  std::size_t cols = 0;
};

/// Row-major bit-packed {+1,-1} matrix in 64-bit words.
///
/// Encoding: logical +1 <-> bit 1, logical -1 <-> bit 0. All padding bits
/// beyond `cols` in the last word of every row are kept at 0; every kernel
/// relies on that when masking the final word.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows),
        cols_(cols),
        words_per_row_((cols + 63) / 64),
        words_(rows * words_per_row_, 0) {}

  /// Packs a matrix whose entries are exactly +1.0 or -1.0.
  static BitMatrix pack(const DenseMatrix& m);
  DenseMatrix unpack() const;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return words_per_row_; }

  bool get(std::size_t i, std::size_t j) const {
    return (words_[i * words_per_row_ + (j >> 6)] >> (j & 63)) & 1u;
  }
  void set(std::size_t i, std::size_t j, bool plus) {
    std::uint64_t& w = words_[i * words_per_row_ + (j >> 6)];
    std::uint64_t bit = std::uint64_t(1) << (j & 63);
    if (plus)
      w |= bit;
    else
      w &= ~bit;
  }
  /// Signed value at (i, j): +1 or -1.
  int value(std::size_t i, std::size_t j) const { return get(i, j) ? 1 : -1; }

  BitRowView row_view(std::size_t i) const {
    return {words_.data() + i * words_per_row_, cols_};
  }
  std::uint64_t* row_words(std::size_t i) {
    return words_.data() + i * words_per_row_;
  }
  const std::uint64_t* row_words(std::size_t i) const {
    return words_.data() + i * words_per_row_;
  }
  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// Mask selecting the valid bits of the last word of a row (all-ones when
  /// cols is a multiple of 64).
  std::uint64_t last_word_mask() const {
    unsigned r = cols_ & 63;
    return r == 0 ? ~std::uint64_t(0) : ((std::uint64_t(1) << r) - 1);
  }

  /// Clears padding bits in every row; builders that write whole words call
  /// this before handing the matrix to kernels.
  void clear_padding();
  bool padding_clear() const;

  BitMatrix transposed() const;

  bool operator==(const BitMatrix& other) const = default;

  /// "BGNB" container: magic, version byte 1, rows/cols as little-endian
  /// u64, then the words little-endian. Bit-exact across platforms.
  void serialize(std::ostream& os) const;
  static BitMatrix deserialize(std::istream& is);

 private:
  std::size_t rows_ = 0, cols_ = 0, words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Sparse {+1,0,-1} matrix stored as two disjoint bitmasks. Houses the
/// ternarized attention coefficients; bits are only ever set at positions
/// present in the owning graph's adjacency.
class TernaryMatrix {
 public:
  TernaryMatrix() = default;
  TernaryMatrix(std::size_t rows, std::size_t cols)
      : plus_(rows, cols), minus_(rows, cols) {}

  std::size_t rows() const { return plus_.rows(); }
  std::size_t cols() const { return plus_.cols(); }

  void set(std::size_t i, std::size_t j, int v) {
    plus_.set(i, j, v > 0);
    minus_.set(i, j, v < 0);
  }
  int value(std::size_t i, std::size_t j) const {
    if (plus_.get(i, j)) return 1;
    if (minus_.get(i, j)) return -1;
    return 0;
  }

  const BitMatrix& plus_mask() const { return plus_; }
  const BitMatrix& minus_mask() const { return minus_; }
  BitMatrix& plus_mask() { return plus_; }
  BitMatrix& minus_mask() { return minus_; }

  /// plus AND minus must be zero everywhere.
  bool masks_disjoint() const;

 private:
  BitMatrix plus_, minus_;
};

/// +-1 dot product of two packed rows: per word xnor, mask the padding of
/// the last word, popcount; result = 2*popcount - cols. Widened to 64-bit
/// signed so cols up to 2^31 cannot overflow any scaling downstream.
std::int64_t xnor_popcount_dot(BitRowView a, BitRowView b);

/// A (m x n) times B (n x d) over {+1,-1}, with B supplied pre-transposed
/// (d x n) so every output is a row-by-row xnor/popcount dot. Result is
/// integer-valued.
DenseMatrix bit_matmul(const BitMatrix& a, const BitMatrix& b_transposed);

/// Multiplication-free product of a +-1 mask with a real matrix:
/// out[i][j] = sum_{k: M[i][k]=+1} X[k][j] - sum_{k: M[i][k]=-1} X[k][j].
/// O(m*n*d) additions (the per-output-row cost is O(n*d)).
DenseMatrix masked_sum_matmul(const BitMatrix& mask, const DenseMatrix& x);

/// Row i of coeffs (over {+1,0,-1}) times X: adds X rows under plus bits,
/// subtracts under minus bits, skips zeros. Output written to `out`.
void ternary_weighted_sum_row(const TernaryMatrix& coeffs, std::size_t i,
                              const DenseMatrix& x, double* out);
/// All rows at once.
DenseMatrix ternary_weighted_sum(const TernaryMatrix& coeffs,
                                 const DenseMatrix& x);

/// Fraction of agreeing positions, in [0, 1].
double hamming_similarity(BitRowView a, BitRowView b);

}  // namespace bgn
