#include "core/bgat.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/wire.hpp"

namespace bgn {

Level level_from_string(const std::string& s) {
  if (s == "none") return Level::none;
  if (s == "w") return Level::w;
  if (s == "e") return Level::e;
  if (s == "we") return Level::we;
  if (s == "wec") return Level::wec;
  fail(Errc::bad_param, "unknown binarization level '" + s + "'");
}

std::string level_to_string(Level l) {
  switch (l) {
    case Level::none: return "none";
    case Level::w: return "w";
    case Level::e: return "e";
    case Level::we: return "we";
    case Level::wec: return "wec";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "ste") return Estimator::ste;
  if (s == "reinforce") return Estimator::reinforce;
  fail(Errc::bad_param, "unknown estimator '" + s + "'");
}

std::string estimator_to_string(Estimator e) {
  return e == Estimator::ste ? "ste" : "reinforce";
}

void ModelConfig::validate() const {
  require(n_layers >= 1, Errc::bad_param, "config: need at least one layer");
  require(heads >= 1, Errc::bad_param, "config: need at least one head");
  require(head_dim >= 1, Errc::bad_param, "config: head_dim must be >= 1");
}

CoeffOutput attention_coefficients(const Graph& g,
                                   std::span<const double> scores,
                                   bool ternarize, bool center) {
  require(scores.size() == g.targets.size(), Errc::dim_mismatch,
          "attention_coefficients: scores must align with adjacency slots");
  CoeffOutput out;
  out.ternary = ternarize;
  out.soft.resize(scores.size());
  for (std::size_t v = 0; v < g.n_nodes; ++v) {
    std::size_t begin = g.offsets[v], end = g.offsets[v + 1];
    if (begin == end) continue;
    double mx = scores[begin];
    for (std::size_t idx = begin + 1; idx < end; ++idx)
      mx = std::max(mx, scores[idx]);
    double sum = 0.0;
    for (std::size_t idx = begin; idx < end; ++idx) {
      out.soft[idx] = std::exp(scores[idx] - mx);
      sum += out.soft[idx];
    }
    for (std::size_t idx = begin; idx < end; ++idx) out.soft[idx] /= sum;
  }
  if (!ternarize) return out;

  out.tern = TernaryMatrix(g.n_nodes, g.n_nodes);
  out.fallback.assign(g.n_nodes, 0);
  if (center) out.centered.resize(scores.size());
  for (std::size_t v = 0; v < g.n_nodes; ++v) {
    std::size_t begin = g.offsets[v], end = g.offsets[v + 1];
    if (begin == end) continue;
    std::size_t deg = end - begin;
    double mean = 0.0;
    if (center) {
      for (std::size_t idx = begin; idx < end; ++idx) mean += out.soft[idx];
      mean /= static_cast<double>(deg);
    }
    bool any = false;
    for (std::size_t idx = begin; idx < end; ++idx) {
      double c = out.soft[idx] - (center ? mean : 0.0);
      if (center) out.centered[idx] = c;
      std::uint32_t j = g.targets[idx];
      if (c > 0.0) {
        out.tern.plus_mask().set(v, j, true);
        any = true;
      } else if (c < 0.0) {
        out.tern.minus_mask().set(v, j, true);
        any = true;
      }
    }
    if (!any) {
      // Uniform coefficients center to exactly zero; fall back to mean
      // aggregation so the node still receives messages.
      out.fallback[v] = 1;
      for (std::size_t idx = begin; idx < end; ++idx)
        out.tern.plus_mask().set(v, g.targets[idx], true);
    }
  }
  return out;
}

std::pair<double, double> loss_and_accuracy(
    const DenseMatrix& probs, std::span<const std::uint32_t> labels,
    std::span<const std::uint32_t> ids) {
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::uint32_t v : ids) {
    require(v < probs.rows() && v < labels.size(), Errc::index_out_of_range,
            "loss_and_accuracy: node id out of range");
    std::uint32_t label = labels[v];
    require(label < probs.cols(), Errc::index_out_of_range,
            "loss_and_accuracy: label out of range");
    const double* r = probs.row(v);
    loss -= std::log(std::max(r[label], 1e-300));
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < probs.cols(); ++k) {
      if (r[k] > r[argmax]) argmax = k;
    }
    if (argmax == label) ++hits;
  }
  double acc = ids.empty() ? 1.0
                           : static_cast<double>(hits) /
                                 static_cast<double>(ids.size());
  return {loss, acc};
}

Model::Model(ModelConfig cfg, std::size_t in_dim, std::size_t n_classes,
             RngStream& init_rng)
    : cfg_(cfg), in_dim_(in_dim), n_classes_(n_classes) {
  cfg_.validate();
  require(in_dim >= 1 && n_classes >= 1, Errc::bad_param,
          "model: need in_dim >= 1 and n_classes >= 1");
  init_index();
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    std::size_t din = layer_in_dim(l);
    std::size_t dout = layer_out_dim(l);
    double limit = std::sqrt(6.0 / static_cast<double>(din + dout));
    for (std::size_t k = 0; k < heads_in_layer(l); ++k) {
      DenseMatrix w(din, dout);
      for (std::size_t i = 0; i < w.size(); ++i)
        w.data()[i] = init_rng.next_uniform(-limit, limit);
      params_.push_back(std::move(w));
      if (cfg_.scoring == Scoring::additive) {
        DenseMatrix a_src(1, dout), a_dst(1, dout);
        for (std::size_t i = 0; i < dout; ++i)
          a_src.data()[i] = 0.1 * init_rng.next_normal();
        for (std::size_t i = 0; i < dout; ++i)
          a_dst.data()[i] = 0.1 * init_rng.next_normal();
        params_.push_back(std::move(a_src));
        params_.push_back(std::move(a_dst));
      } else {
        params_.emplace_back();
        params_.emplace_back();
      }
    }
  }
  std::size_t total_heads = 0, hidden_heads = 0;
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    total_heads += heads_in_layer(l);
    if (l + 1 < cfg_.n_layers) hidden_heads += heads_in_layer(l);
  }
  rf_weight_.assign(total_heads, ReinforceState{});
  rf_act_.assign(hidden_heads, ReinforceState{});
}

void Model::init_index() {
  layer_param_base_.assign(cfg_.n_layers + 1, 0);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    layer_param_base_[l + 1] = layer_param_base_[l] + 3 * heads_in_layer(l);
  }
}

std::size_t Model::heads_in_layer(std::size_t layer) const {
  if (layer + 1 == cfg_.n_layers) return cfg_.avg_output_heads ? cfg_.heads : 1;
  return cfg_.heads;
}

std::size_t Model::layer_in_dim(std::size_t layer) const {
  return layer == 0 ? in_dim_ : cfg_.heads * cfg_.head_dim;
}

std::size_t Model::layer_out_dim(std::size_t layer) const {
  return layer + 1 == cfg_.n_layers ? n_classes_ : cfg_.head_dim;
}

bool Model::layer_weights_binarized(std::size_t layer) const {
  if (!level_binarizes_weights(cfg_.level)) return false;
  if (layer + 1 == cfg_.n_layers && cfg_.real_output_layer) return false;
  return true;
}

std::size_t Model::weight_index(std::size_t layer, std::size_t head) const {
  return layer_param_base_[layer] + 3 * head;
}
std::size_t Model::score_src_index(std::size_t layer, std::size_t head) const {
  return weight_index(layer, head) + 1;
}
std::size_t Model::score_dst_index(std::size_t layer, std::size_t head) const {
  return weight_index(layer, head) + 2;
}

bool Model::param_is_weight(std::size_t idx) const {
  return idx % 3 == 0;
}

namespace {

double row_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

ForwardResult Model::forward(const Graph& g, const ForwardOptions& opts) const {
  require(g.n_features() == in_dim_, Errc::dim_mismatch,
          "forward: graph feature width does not match model input");
  const std::size_t n = g.n_nodes;
  const std::size_t n_slots = g.targets.size();
  const bool emb_bin = level_binarizes_embeddings(cfg_.level);
  const bool tern_coeffs = level_ternarizes_coefficients(cfg_.level);
  const bool stochastic =
      cfg_.estimator == Estimator::reinforce && opts.rng != nullptr;

  ForwardResult fr;
  fr.recorded = opts.record;
  if (opts.record) fr.layers.resize(cfg_.n_layers);

  DenseMatrix h_real = g.features;
  BitMatrix h_bits;
  bool h_binary = false;

  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const bool out_layer = l + 1 == cfg_.n_layers;
    const std::size_t nheads = heads_in_layer(l);
    const std::size_t dout = layer_out_dim(l);
    const bool w_bin = layer_weights_binarized(l);

    LayerCache scratch;
    LayerCache& lc = opts.record ? fr.layers[l] : scratch;
    lc.in_real = std::move(h_real);
    lc.in_bits = std::move(h_bits);
    lc.in_is_binary = h_binary;
    if (opts.record) {
      lc.w_eff.resize(nheads);
      lc.w_eff_t_bits.resize(nheads);
      lc.w_draw.resize(nheads);
      lc.heads.resize(nheads);
    }

    DenseMatrix in_t;  // shared across heads for the real-input masked path
    bool need_in_t = opts.fast_kernels && !lc.in_is_binary && w_bin;
    if (need_in_t) in_t = lc.in_real.transposed();

    DenseMatrix out_concat;
    if (!out_layer) out_concat = DenseMatrix(n, nheads * dout);
    DenseMatrix logits(out_layer ? n : 0, out_layer ? n_classes_ : 0);

    for (std::size_t k = 0; k < nheads; ++k) {
      const DenseMatrix& w_latent = params_[weight_index(l, k)];

      // Binary weight views are refreshed from the latent weights here.
      DenseMatrix w_eff_vals;
      BitMatrix w_bits_draw, w_t_bits;
      if (w_bin) {
        w_bits_draw = stochastic ? binarize_stoch(w_latent, *opts.rng)
                                 : binarize_det(w_latent);
        w_eff_vals = w_bits_draw.unpack();
        if (opts.fast_kernels) w_t_bits = w_bits_draw.transposed();
      }
      const DenseMatrix& w_eff = w_bin ? w_eff_vals : w_latent;

      DenseMatrix p;
      if (opts.fast_kernels) {
        if (lc.in_is_binary && w_bin) {
          p = bit_matmul(lc.in_bits, w_t_bits);
        } else if (lc.in_is_binary) {
          p = masked_sum_matmul(lc.in_bits, w_eff);
        } else if (w_bin) {
          p = masked_sum_matmul(w_t_bits, in_t).transposed();
        } else {
          p = lc.in_real.matmul(w_eff);
        }
      } else {
        p = lc.in_real.matmul(w_eff);
      }

      std::vector<double> scores(n_slots);
      std::vector<double> s_src, s_dst;
      if (cfg_.scoring == Scoring::additive) {
        const DenseMatrix& a_src = params_[score_src_index(l, k)];
        const DenseMatrix& a_dst = params_[score_dst_index(l, k)];
        s_src.resize(n);
        s_dst.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
          s_src[v] = row_dot(p.row(v), a_src.data(), dout);
          s_dst[v] = row_dot(p.row(v), a_dst.data(), dout);
        }
        for (std::size_t v = 0; v < n; ++v) {
          for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx)
            scores[idx] = s_src[v] + s_dst[g.targets[idx]];
        }
      } else {
        for (std::size_t v = 0; v < n; ++v) {
          const double* pv = p.row(v);
          for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx)
            scores[idx] = row_dot(pv, p.row(g.targets[idx]), dout);
        }
      }

      CoeffOutput co = attention_coefficients(g, scores, tern_coeffs,
                                              cfg_.center_coefficients);

      DenseMatrix z(n, dout);
      if (co.ternary && opts.fast_kernels) {
        z = ternary_weighted_sum(co.tern, p);
      } else if (co.ternary) {
        for (std::size_t v = 0; v < n; ++v) {
          double* zv = z.row(v);
          for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx) {
            std::uint32_t j = g.targets[idx];
            int c = co.tern.value(v, j);
            if (c == 0) continue;
            const double* pj = p.row(j);
            if (c > 0)
              for (std::size_t t = 0; t < dout; ++t) zv[t] += pj[t];
            else
              for (std::size_t t = 0; t < dout; ++t) zv[t] -= pj[t];
          }
        }
      } else {
        for (std::size_t v = 0; v < n; ++v) {
          double* zv = z.row(v);
          for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx) {
            double c = co.soft[idx];
            const double* pj = p.row(g.targets[idx]);
            for (std::size_t t = 0; t < dout; ++t) zv[t] += c * pj[t];
          }
        }
      }

      BitMatrix z_bits;
      if (out_layer) {
        double inv = 1.0 / static_cast<double>(nheads);
        for (std::size_t v = 0; v < n; ++v) {
          const double* zv = z.row(v);
          double* lv = logits.row(v);
          for (std::size_t t = 0; t < n_classes_; ++t) lv[t] += inv * zv[t];
        }
      } else if (emb_bin) {
        z_bits = stochastic ? binarize_stoch(z, *opts.rng) : binarize_det(z);
        for (std::size_t v = 0; v < n; ++v) {
          double* ov = out_concat.row(v) + k * dout;
          for (std::size_t t = 0; t < dout; ++t)
            ov[t] = z_bits.get(v, t) ? 1.0 : -1.0;
        }
      } else {
        for (std::size_t v = 0; v < n; ++v) {
          double* ov = out_concat.row(v) + k * dout;
          const double* zv = z.row(v);
          for (std::size_t t = 0; t < dout; ++t) ov[t] = zv[t];
        }
      }

      if (opts.record) {
        HeadCache& hc = lc.heads[k];
        hc.p = std::move(p);
        hc.s_src = std::move(s_src);
        hc.s_dst = std::move(s_dst);
        hc.scores = std::move(scores);
        hc.soft = std::move(co.soft);
        hc.centered = std::move(co.centered);
        hc.tern = std::move(co.tern);
        hc.fallback = std::move(co.fallback);
        hc.z = std::move(z);
        hc.z_bits = std::move(z_bits);
        lc.w_eff[k] = w_bin ? std::move(w_eff_vals) : w_latent;
        lc.w_eff_t_bits[k] = std::move(w_t_bits);
        lc.w_draw[k] = std::move(w_bits_draw);
      }
    }

    if (out_layer) {
      double scale = cfg_.logit_scale == LogitScale::inv_sqrt_dim
                         ? 1.0 / std::sqrt(static_cast<double>(layer_in_dim(l)))
                         : 1.0;
      fr.logits = DenseMatrix(n, n_classes_);
      fr.probs = DenseMatrix(n, n_classes_);
      for (std::size_t v = 0; v < n; ++v) {
        const double* lv = logits.row(v);
        double* ov = fr.logits.row(v);
        for (std::size_t t = 0; t < n_classes_; ++t) ov[t] = scale * lv[t];
        double mx = ov[0];
        for (std::size_t t = 1; t < n_classes_; ++t) mx = std::max(mx, ov[t]);
        double sum = 0.0;
        double* pv = fr.probs.row(v);
        for (std::size_t t = 0; t < n_classes_; ++t) {
          pv[t] = std::exp(ov[t] - mx);
          sum += pv[t];
        }
        for (std::size_t t = 0; t < n_classes_; ++t) pv[t] /= sum;
      }
    } else {
      h_binary = emb_bin;
      if (h_binary) h_bits = BitMatrix::pack(out_concat);
      h_real = std::move(out_concat);
    }
  }
  return fr;
}

Grads Model::zero_grads() const {
  Grads gr;
  gr.by_param.reserve(params_.size());
  for (const auto& pm : params_)
    gr.by_param.emplace_back(pm.rows(), pm.cols());
  return gr;
}

Grads Model::backward(const Graph& g, std::span<const std::uint32_t> ids,
                      const ForwardResult& fwd, double loss_value) {
  require(fwd.recorded && fwd.layers.size() == cfg_.n_layers, Errc::stale_cache,
          "backward: requires a recorded forward pass");
  const std::size_t n = g.n_nodes;
  const bool emb_bin = level_binarizes_embeddings(cfg_.level);
  const bool tern_coeffs = level_ternarizes_coefficients(cfg_.level);
  const bool reinforce = cfg_.estimator == Estimator::reinforce;

  Grads gr = zero_grads();

  // Cross-entropy with softmax folds to probs - onehot on the labeled rows.
  DenseMatrix d_out(n, n_classes_);
  for (std::uint32_t v : ids) {
    require(v < n, Errc::index_out_of_range, "backward: id out of range");
    const double* pv = fwd.probs.row(v);
    double* dv = d_out.row(v);
    for (std::size_t t = 0; t < n_classes_; ++t) dv[t] = pv[t];
    dv[g.labels[v]] -= 1.0;
  }
  {
    double scale =
        cfg_.logit_scale == LogitScale::inv_sqrt_dim
            ? 1.0 / std::sqrt(static_cast<double>(layer_in_dim(cfg_.n_layers - 1)))
            : 1.0;
    d_out.scale(scale);
  }

  std::size_t head_site = 0;
  std::vector<std::size_t> head_base(cfg_.n_layers, 0);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    head_base[l] = head_site;
    head_site += heads_in_layer(l);
  }

  for (std::size_t l = cfg_.n_layers; l-- > 0;) {
    const bool out_layer = l + 1 == cfg_.n_layers;
    const std::size_t nheads = heads_in_layer(l);
    const std::size_t dout = layer_out_dim(l);
    const std::size_t din = layer_in_dim(l);
    const LayerCache& lc = fwd.layers[l];

    DenseMatrix d_in(n, din);
    for (std::size_t k = 0; k < nheads; ++k) {
      const HeadCache& hc = lc.heads[k];

      // Gradient w.r.t. this head's pre-activation z.
      DenseMatrix dz(n, dout);
      if (out_layer) {
        double inv = 1.0 / static_cast<double>(nheads);
        for (std::size_t v = 0; v < n; ++v) {
          const double* dv = d_out.row(v);
          double* zv = dz.row(v);
          for (std::size_t t = 0; t < dout; ++t) zv[t] = inv * dv[t];
        }
      } else if (emb_bin) {
        DenseMatrix d_slice(n, dout);
        for (std::size_t v = 0; v < n; ++v) {
          const double* dv = d_out.row(v) + k * dout;
          double* sv = d_slice.row(v);
          for (std::size_t t = 0; t < dout; ++t) sv[t] = dv[t];
        }
        if (reinforce) {
          dz = reinforce_update_and_estimate(hc.z, hc.z_bits, loss_value,
                                             rf_act_[head_base[l] + k]);
        } else {
          dz = ste_backward(d_slice, hc.z, cfg_.ste_clip);
        }
      } else {
        for (std::size_t v = 0; v < n; ++v) {
          const double* dv = d_out.row(v) + k * dout;
          double* zv = dz.row(v);
          for (std::size_t t = 0; t < dout; ++t) zv[t] = dv[t];
        }
      }

      // Aggregation backward: z_v = sum_j coeff_vj * p_j.
      DenseMatrix dp(n, dout);
      std::vector<double> d_coef(g.targets.size(), 0.0);
      for (std::size_t v = 0; v < n; ++v) {
        const double* zv = dz.row(v);
        for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx) {
          std::uint32_t j = g.targets[idx];
          const double* pj = hc.p.row(j);
          double c = tern_coeffs ? static_cast<double>(hc.tern.value(v, j))
                                 : hc.soft[idx];
          if (c != 0.0) {
            double* dpj = dp.row(j);
            for (std::size_t t = 0; t < dout; ++t) dpj[t] += c * zv[t];
          }
          d_coef[idx] = row_dot(zv, pj, dout);
        }
      }

      // Coefficient backward: straight-through over the ternarization, then
      // centering (I - 11^T/deg), then the softmax Jacobian.
      std::vector<double> d_soft(g.targets.size());
      if (tern_coeffs && cfg_.center_coefficients) {
        for (std::size_t v = 0; v < n; ++v) {
          std::size_t begin = g.offsets[v], end = g.offsets[v + 1];
          if (begin == end) continue;
          double mean = 0.0;
          for (std::size_t idx = begin; idx < end; ++idx) mean += d_coef[idx];
          mean /= static_cast<double>(end - begin);
          for (std::size_t idx = begin; idx < end; ++idx)
            d_soft[idx] = d_coef[idx] - mean;
        }
      } else {
        d_soft = d_coef;
      }
      std::vector<double> d_scores(g.targets.size());
      for (std::size_t v = 0; v < n; ++v) {
        std::size_t begin = g.offsets[v], end = g.offsets[v + 1];
        double dot = 0.0;
        for (std::size_t idx = begin; idx < end; ++idx)
          dot += d_soft[idx] * hc.soft[idx];
        for (std::size_t idx = begin; idx < end; ++idx)
          d_scores[idx] = hc.soft[idx] * (d_soft[idx] - dot);
      }

      // Scoring backward.
      if (cfg_.scoring == Scoring::additive) {
        std::vector<double> d_src(n, 0.0), d_dst(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
          for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx) {
            d_src[v] += d_scores[idx];
            d_dst[g.targets[idx]] += d_scores[idx];
          }
        }
        const DenseMatrix& a_src = params_[score_src_index(l, k)];
        const DenseMatrix& a_dst = params_[score_dst_index(l, k)];
        DenseMatrix& g_src = gr.by_param[score_src_index(l, k)];
        DenseMatrix& g_dst = gr.by_param[score_dst_index(l, k)];
        for (std::size_t v = 0; v < n; ++v) {
          const double* pv = hc.p.row(v);
          double* dpv = dp.row(v);
          for (std::size_t t = 0; t < dout; ++t) {
            g_src.data()[t] += d_src[v] * pv[t];
            g_dst.data()[t] += d_dst[v] * pv[t];
            dpv[t] += d_src[v] * a_src.data()[t] + d_dst[v] * a_dst.data()[t];
          }
        }
      } else {
        for (std::size_t v = 0; v < n; ++v) {
          const double* pv = hc.p.row(v);
          double* dpv = dp.row(v);
          for (std::size_t idx = g.offsets[v]; idx < g.offsets[v + 1]; ++idx) {
            std::uint32_t j = g.targets[idx];
            double ds = d_scores[idx];
            if (ds == 0.0) continue;
            const double* pj = hc.p.row(j);
            double* dpj = dp.row(j);
            for (std::size_t t = 0; t < dout; ++t) {
              dpv[t] += ds * pj[t];
              dpj[t] += ds * pv[t];
            }
          }
        }
      }

      // Linear backward through the effective (possibly binarized) weights.
      const DenseMatrix& w_latent = params_[weight_index(l, k)];
      const DenseMatrix& w_eff = lc.w_eff[k];
      DenseMatrix d_w_eff = lc.in_real.matmul_transposed_self(dp);
      d_in.add_scaled(dp.matmul_transposed_other(w_eff), 1.0);

      DenseMatrix& g_w = gr.by_param[weight_index(l, k)];
      if (layer_weights_binarized(l)) {
        if (reinforce) {
          g_w = reinforce_update_and_estimate(w_latent, lc.w_draw[k],
                                              loss_value,
                                              rf_weight_[head_base[l] + k]);
        } else {
          g_w = ste_backward(d_w_eff, w_latent, cfg_.ste_clip);
        }
      } else {
        g_w = std::move(d_w_eff);
      }
    }
    d_out = std::move(d_in);
  }
  return gr;
}

void Model::clip_latent_weights() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!param_is_weight(i)) continue;
    double* d = params_[i].data();
    for (std::size_t t = 0; t < params_[i].size(); ++t)
      d[t] = std::clamp(d[t], -1.0, 1.0);
  }
}

void Model::ensure_finite() const {
  for (const auto& pm : params_) pm.ensure_finite("model parameters");
}

BitAccounting Model::accounting(const Graph& g) const {
  BitAccounting acc;
  const std::uint64_t slots = g.targets.size();
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    bool w_bin = layer_weights_binarized(l);
    for (std::size_t k = 0; k < heads_in_layer(l); ++k) {
      acc.weight_param_bits +=
          params_[weight_index(l, k)].size() * (w_bin ? 1 : 64);
      acc.scoring_param_bits += params_[score_src_index(l, k)].size() * 64;
      acc.scoring_param_bits += params_[score_dst_index(l, k)].size() * 64;
      acc.coefficient_bits +=
          slots * (level_ternarizes_coefficients(cfg_.level) ? 2 : 64);
    }
    if (l + 1 < cfg_.n_layers) {
      std::uint64_t width = heads_in_layer(l) * layer_out_dim(l);
      acc.embedding_bits +=
          g.n_nodes * width *
          (level_binarizes_embeddings(cfg_.level) ? 1 : 64);
    }
  }
  return acc;
}

void Model::save(std::ostream& os) const {
  os.write("BGNM", 4);
  wire::write_u8(os, 1);
  wire::write_u64(os, cfg_.n_layers);
  wire::write_u64(os, cfg_.heads);
  wire::write_u64(os, cfg_.head_dim);
  wire::write_u8(os, static_cast<std::uint8_t>(cfg_.level));
  wire::write_u8(os, static_cast<std::uint8_t>(cfg_.estimator));
  wire::write_u8(os, static_cast<std::uint8_t>(cfg_.scoring));
  wire::write_u8(os, cfg_.center_coefficients ? 1 : 0);
  wire::write_u8(os, static_cast<std::uint8_t>(cfg_.logit_scale));
  wire::write_u8(os, cfg_.real_output_layer ? 1 : 0);
  wire::write_u8(os, cfg_.avg_output_heads ? 1 : 0);
  wire::write_f64(os, cfg_.ste_clip);
  wire::write_u64(os, in_dim_);
  wire::write_u64(os, n_classes_);
  for (const auto& pm : params_) {
    wire::write_u64(os, pm.rows());
    wire::write_u64(os, pm.cols());
    for (std::size_t i = 0; i < pm.size(); ++i) wire::write_f64(os, pm.data()[i]);
  }
  // Binarized weight views; re-binarizing the latents must reproduce these.
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    for (std::size_t k = 0; k < heads_in_layer(l); ++k) {
      binarize_det(params_[weight_index(l, k)]).serialize(os);
    }
  }
  require(bool(os), Errc::io_error, "model save: write failed");
}

Model Model::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(bool(is) && std::memcmp(magic, "BGNM", 4) == 0, Errc::parse_error,
          "checkpoint: bad magic");
  require(wire::read_u8(is) == 1, Errc::parse_error,
          "checkpoint: unsupported version");
  Model m;
  m.cfg_.n_layers = wire::read_u64(is);
  m.cfg_.heads = wire::read_u64(is);
  m.cfg_.head_dim = wire::read_u64(is);
  m.cfg_.level = static_cast<Level>(wire::read_u8(is));
  m.cfg_.estimator = static_cast<Estimator>(wire::read_u8(is));
  m.cfg_.scoring = static_cast<Scoring>(wire::read_u8(is));
  m.cfg_.center_coefficients = wire::read_u8(is) != 0;
  m.cfg_.logit_scale = static_cast<LogitScale>(wire::read_u8(is));
  m.cfg_.real_output_layer = wire::read_u8(is) != 0;
  m.cfg_.avg_output_heads = wire::read_u8(is) != 0;
  m.cfg_.ste_clip = wire::read_f64(is);
  m.cfg_.validate();
  m.in_dim_ = wire::read_u64(is);
  m.n_classes_ = wire::read_u64(is);
  m.init_index();
  std::size_t total_heads = 0, hidden_heads = 0;
  for (std::size_t l = 0; l < m.cfg_.n_layers; ++l) {
    total_heads += m.heads_in_layer(l);
    if (l + 1 < m.cfg_.n_layers) hidden_heads += m.heads_in_layer(l);
  }
  for (std::size_t i = 0; i < 3 * total_heads; ++i) {
    std::uint64_t rows = wire::read_u64(is);
    std::uint64_t cols = wire::read_u64(is);
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = wire::read_f64(is);
    m.params_.emplace_back(rows, cols, std::move(data));
  }
  for (std::size_t l = 0; l < m.cfg_.n_layers; ++l) {
    for (std::size_t k = 0; k < m.heads_in_layer(l); ++k) {
      BitMatrix view = BitMatrix::deserialize(is);
      BitMatrix fresh = binarize_det(m.params_[m.weight_index(l, k)]);
      require(view == fresh, Errc::parse_error,
              "checkpoint: stored binary view does not match re-binarized "
              "latent weights");
    }
  }
  m.rf_weight_.assign(total_heads, ReinforceState{});
  m.rf_act_.assign(hidden_heads, ReinforceState{});
  return m;
}

void Model::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), Errc::io_error, "cannot write " + path);
  save(os);
}

Model Model::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), Errc::io_error, "cannot open " + path);
  return load(is);
}

}  // namespace bgn
