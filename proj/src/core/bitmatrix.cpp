#include "core/bitmatrix.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "core/wire.hpp"

namespace bgn {

using wire::read_u64;
using wire::write_u64;

BitMatrix BitMatrix::pack(const DenseMatrix& m) {
  BitMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::uint64_t* w = out.row_words(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      if (v == 1.0) {
        w[j >> 6] |= std::uint64_t(1) << (j & 63);
      } else if (v != -1.0) {
        fail(Errc::entry_not_binary,
             "pack: entry at (" + std::to_string(i) + "," + std::to_string(j) +
                 ") is neither +1 nor -1");
      }
    }
  }
  return out;
}

DenseMatrix BitMatrix::unpack() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const std::uint64_t* w = row_words(i);
    double* o = out.row(i);
    for (std::size_t j = 0; j < cols_; ++j) {
      o[j] = (w[j >> 6] >> (j & 63)) & 1u ? 1.0 : -1.0;
    }
  }
  return out;
}

void BitMatrix::clear_padding() {
  if (words_per_row_ == 0) return;
  std::uint64_t mask = last_word_mask();
  for (std::size_t i = 0; i < rows_; ++i) {
    row_words(i)[words_per_row_ - 1] &= mask;
  }
}

bool BitMatrix::padding_clear() const {
  if (words_per_row_ == 0) return true;
  std::uint64_t mask = last_word_mask();
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_words(i)[words_per_row_ - 1] & ~mask) return false;
  }
  return true;
}

BitMatrix BitMatrix::transposed() const {
  BitMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const std::uint64_t* w = row_words(i);
    for (std::size_t wi = 0; wi < words_per_row_; ++wi) {
      std::uint64_t word = w[wi];
      while (word) {
        unsigned b = std::countr_zero(word);
        word &= word - 1;
        out.set(wi * 64 + b, i, true);
      }
    }
  }
  return out;
}

void BitMatrix::serialize(std::ostream& os) const {
  os.write("BGNB", 4);
  char version = 1;
  os.write(&version, 1);
  write_u64(os, rows_);
  write_u64(os, cols_);
  for (std::uint64_t w : words_) write_u64(os, w);
  require(bool(os), Errc::io_error, "BitMatrix serialize: write failed");
}

BitMatrix BitMatrix::deserialize(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(bool(is) && std::memcmp(magic, "BGNB", 4) == 0, Errc::parse_error,
          "BitMatrix: bad magic");
  char version = 0;
  is.read(&version, 1);
  require(bool(is) && version == 1, Errc::parse_error,
          "BitMatrix: unsupported version");
  std::uint64_t rows = read_u64(is);
  std::uint64_t cols = read_u64(is);
  BitMatrix out(rows, cols);
  for (auto& w : out.words_) w = read_u64(is);
  require(out.padding_clear(), Errc::parse_error,
          "BitMatrix: nonzero padding bits");
  return out;
}

bool TernaryMatrix::masks_disjoint() const {
  auto p = plus_.words();
  auto m = minus_.words();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] & m[i]) return false;
  }
  return true;
}

std::int64_t xnor_popcount_dot(BitRowView a, BitRowView b) {
  require(a.cols == b.cols, Errc::dim_mismatch,
          "xnor_popcount_dot: length mismatch");
  if (a.cols == 0) return 0;
  std::size_t nwords = (a.cols + 63) / 64;
  unsigned r = a.cols & 63;
  std::uint64_t last_mask = r == 0 ? ~std::uint64_t(0) : ((std::uint64_t(1) << r) - 1);
  std::int64_t agree = 0;
  for (std::size_t w = 0; w + 1 < nwords; ++w) {
    agree += std::popcount(~(a.words[w] ^ b.words[w]));
  }
  agree += std::popcount(~(a.words[nwords - 1] ^ b.words[nwords - 1]) & last_mask);
  return 2 * agree - static_cast<std::int64_t>(a.cols);
}

DenseMatrix bit_matmul(const BitMatrix& a, const BitMatrix& b_transposed) {
  require(a.cols() == b_transposed.cols(), Errc::dim_mismatch,
          "bit_matmul: inner dimensions disagree");
  DenseMatrix out(a.rows(), b_transposed.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    BitRowView ra = a.row_view(i);
    double* o = out.row(i);
    for (std::size_t j = 0; j < b_transposed.rows(); ++j) {
      o[j] = static_cast<double>(xnor_popcount_dot(ra, b_transposed.row_view(j)));
    }
  }
  return out;
}

DenseMatrix masked_sum_matmul(const BitMatrix& mask, const DenseMatrix& x) {
  require(mask.cols() == x.rows(), Errc::dim_mismatch,
          "masked_sum_matmul: inner dimensions disagree");
  std::size_t d = x.cols();
  DenseMatrix out(mask.rows(), d);
  std::vector<double> pos(d), neg(d);
  std::uint64_t last_mask = mask.last_word_mask();
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    std::fill(pos.begin(), pos.end(), 0.0);
    std::fill(neg.begin(), neg.end(), 0.0);
    const std::uint64_t* w = mask.row_words(i);
    for (std::size_t wi = 0; wi < mask.words_per_row(); ++wi) {
      std::uint64_t valid = wi + 1 == mask.words_per_row() ? last_mask
                                                           : ~std::uint64_t(0);
      std::uint64_t plus = w[wi] & valid;
      std::uint64_t minus = ~w[wi] & valid;
      while (plus) {
        unsigned b = std::countr_zero(plus);
        plus &= plus - 1;
        const double* xr = x.row(wi * 64 + b);
        for (std::size_t j = 0; j < d; ++j) pos[j] += xr[j];
      }
      while (minus) {
        unsigned b = std::countr_zero(minus);
        minus &= minus - 1;
        const double* xr = x.row(wi * 64 + b);
        for (std::size_t j = 0; j < d; ++j) neg[j] += xr[j];
      }
    }
    double* o = out.row(i);
    for (std::size_t j = 0; j < d; ++j) o[j] = pos[j] - neg[j];
  }
  return out;
}

void ternary_weighted_sum_row(const TernaryMatrix& coeffs, std::size_t i,
                              const DenseMatrix& x, double* out) {
  require(coeffs.cols() == x.rows(), Errc::dim_mismatch,
          "ternary_weighted_sum: inner dimensions disagree");
  std::size_t d = x.cols();
  for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
  const BitMatrix& plus = coeffs.plus_mask();
  const BitMatrix& minus = coeffs.minus_mask();
  const std::uint64_t* pw = plus.row_words(i);
  const std::uint64_t* mw = minus.row_words(i);
  for (std::size_t wi = 0; wi < plus.words_per_row(); ++wi) {
    std::uint64_t p = pw[wi];
    while (p) {
      unsigned b = std::countr_zero(p);
      p &= p - 1;
      const double* xr = x.row(wi * 64 + b);
      for (std::size_t j = 0; j < d; ++j) out[j] += xr[j];
    }
    std::uint64_t m = mw[wi];
    while (m) {
      unsigned b = std::countr_zero(m);
      m &= m - 1;
      const double* xr = x.row(wi * 64 + b);
      for (std::size_t j = 0; j < d; ++j) out[j] -= xr[j];
    }
  }
}

DenseMatrix ternary_weighted_sum(const TernaryMatrix& coeffs,
                                 const DenseMatrix& x) {
  DenseMatrix out(coeffs.rows(), x.cols());
  for (std::size_t i = 0; i < coeffs.rows(); ++i) {
    ternary_weighted_sum_row(coeffs, i, x, out.row(i));
  }
  return out;
}

double hamming_similarity(BitRowView a, BitRowView b) {
  require(a.cols == b.cols, Errc::dim_mismatch,
          "hamming_similarity: length mismatch");
  require(a.cols > 0, Errc::bad_param, "hamming_similarity: empty vectors");
  std::int64_t dot = xnor_popcount_dot(a, b);
  return static_cast<double>(dot + static_cast<std::int64_t>(a.cols)) /
         static_cast<double>(2 * a.cols);
}

}  // namespace bgn
