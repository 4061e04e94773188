#pragma once

// Linear-chain CRF over angularly ordered slices. The circular arrangement of
// numerals is cut right after the north slice; each node may see its
// angular neighbours' features through concatenation. Exact sum-product and
// max-product inference, L2-regularised negative log-likelihood with an
// analytic gradient, and full-batch gradient descent training.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clockst/error.hpp"
#include "clockst/recognizer.hpp"
#include "clockst/stslice.hpp"

namespace clockst {

struct CrfFeatureConfig {
  bool concat = true;       // x_i = [x_{i-1}; x_i; x_{i+1}]
  bool context = true;      // append angular position and stroke count
  bool wrap = true;         // neighbours wrap around the circle for concatenation
  bool downsample = false;  // 2x2 average-pool the feature images

  int image_dim() const { return downsample ? kFeatureLength / 4 : kFeatureLength; }
  int base_dim() const { return image_dim() + (context ? 2 : 0); }
};

/// Per-slice base vector: flattened feature images [+ angle/360, strokes/10].
inline Eigen::VectorXd slice_base_features(const STSlice& s, const CrfFeatureConfig& cfg) {
  const auto img = extract_features(s.strokes);
  const auto& src = cfg.downsample ? img.downsampled() : img.values;
  Eigen::VectorXd v(cfg.base_dim());
  for (std::size_t k = 0; k < src.size(); ++k) v(static_cast<Eigen::Index>(k)) = src[k];
  if (cfg.context) {
    v(cfg.image_dim()) = s.angular_mid.degrees() / 360.0;
    v(cfg.image_dim() + 1) = static_cast<double>(s.size()) / 10.0;
  }
  return v;
}

/// A chain in broken-circle order. Base features are stored once; the
/// concatenated node vector is assembled on demand.
struct ChainInstance {
  Eigen::MatrixXd base;           // n x B
  std::vector<int> slice_index;   // chain position -> caller's slice index
  std::vector<int> labels;        // 0-based gold labels, empty if unlabeled
  bool concat = true;
  bool wrap = true;

  int size() const { return static_cast<int>(base.rows()); }
  int base_dim() const { return static_cast<int>(base.cols()); }
  int node_dim() const { return concat ? 3 * base_dim() : base_dim(); }

  int left(int i) const {
    if (i > 0) return i - 1;
    return wrap || size() == 1 ? size() - 1 : -1;
  }
  int right(int i) const {
    if (i + 1 < size()) return i + 1;
    return wrap || size() == 1 ? 0 : -1;
  }

  Eigen::VectorXd node_features(int i) const {
    if (!concat) return base.row(i).transpose();
    const int b = base_dim();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3 * b);
    if (left(i) >= 0) x.segment(0, b) = base.row(left(i)).transpose();
    x.segment(b, b) = base.row(i).transpose();
    if (right(i) >= 0) x.segment(2 * b, b) = base.row(right(i)).transpose();
    return x;
  }
};

inline ChainInstance make_chain(Eigen::MatrixXd base, bool concat, bool wrap, std::vector<int> labels = {}) {
  ChainInstance c;
  c.base = std::move(base);
  c.slice_index.resize(static_cast<std::size_t>(c.base.rows()));
  std::iota(c.slice_index.begin(), c.slice_index.end(), 0);
  c.labels = std::move(labels);
  c.concat = concat;
  c.wrap = wrap;
  return c;
}

/// Index of the slice nearest 12 o'clock; ties go to the earliest layer.
inline std::size_t north_slice(std::span<const STSlice> slices) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < slices.size(); ++i) {
    const double di = bearing_diff(slices[i].angular_mid, ClockBearing(0.0));
    const double db = bearing_diff(slices[best].angular_mid, ClockBearing(0.0));
    if (di < db || (di == db && slices[i].layer < slices[best].layer)) best = i;
  }
  return best;
}

/// Orders slices clockwise starting at the north slice. `gold` (1-based,
/// parallel to `slices`) is optional.
inline ChainInstance build_chain(std::span<const STSlice> slices, const CrfFeatureConfig& cfg,
                                 std::span<const int> gold = {}) {
  if (slices.empty()) throw EmptyInputError("cannot build a chain without slices");
  const std::size_t north = north_slice(slices);
  const double origin = slices[north].angular_mid.degrees();
  std::vector<std::size_t> order(slices.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) { return ClockBearing::wrap(slices[i].angular_mid.degrees() - origin); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (a == north || b == north) return a == north && b != north;
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka < kb;
    return slices[a].layer < slices[b].layer;
  });
  ChainInstance c;
  c.concat = cfg.concat;
  c.wrap = cfg.wrap;
  c.base.resize(static_cast<Eigen::Index>(slices.size()), cfg.base_dim());
  for (std::size_t k = 0; k < order.size(); ++k) {
    c.base.row(static_cast<Eigen::Index>(k)) = slice_base_features(slices[order[k]], cfg).transpose();
    c.slice_index.push_back(static_cast<int>(order[k]));
    if (!gold.empty()) c.labels.push_back(gold[order[k]] - 1);
  }
  return c;
}

// ---------------------------------------------------------------------------

struct CrfModel {
  int labels = kNumNumerals;
  int base_dim = 0;
  CrfFeatureConfig features;
  Eigen::MatrixXd W;  // labels x node_dim
  Eigen::MatrixXd T;  // labels x labels, T(prev, next)
  double lambda = 0.01;

  int node_dim() const { return features.concat ? 3 * base_dim : base_dim; }

  static CrfModel zeros(int labels, int base_dim, const CrfFeatureConfig& features, double lambda = 0.01) {
    CrfModel m;
    m.labels = labels;
    m.base_dim = base_dim;
    m.features = features;
    m.W = Eigen::MatrixXd::Zero(labels, m.node_dim());
    m.T = Eigen::MatrixXd::Zero(labels, labels);
    m.lambda = lambda;
    return m;
  }

  static CrfModel zeros(const CrfFeatureConfig& features, double lambda = 0.01) {
    return zeros(kNumNumerals, features.base_dim(), features, lambda);
  }

  double squared_norm() const { return W.squaredNorm() + T.squaredNorm(); }
};

namespace detail {

inline void check_dims(const CrfModel& m, const ChainInstance& c) {
  if (c.base_dim() != m.base_dim || c.concat != m.features.concat || m.W.rows() != m.labels ||
      m.W.cols() != m.node_dim() || m.T.rows() != m.labels || m.T.cols() != m.labels)
    throw DimensionError("CRF model and chain dimensions disagree");
  if (c.size() == 0) throw EmptyInputError("empty chain");
}

/// Node potentials U (n x L).
inline Eigen::MatrixXd unaries(const CrfModel& m, const ChainInstance& c) {
  check_dims(m, c);
  const int L = m.labels, b = m.base_dim, n = c.size();
  if (!m.features.concat) return c.base * m.W.transpose();
  Eigen::MatrixXd stacked(3 * L, b);
  for (int k = 0; k < 3; ++k) stacked.middleRows(k * L, L) = m.W.middleCols(k * b, b);
  const Eigen::MatrixXd a = c.base * stacked.transpose();  // n x 3L
  Eigen::MatrixXd u = a.middleCols(L, L);
  for (int i = 0; i < n; ++i) {
    if (c.left(i) >= 0) u.row(i) += a.block(c.left(i), 0, 1, L);
    if (c.right(i) >= 0) u.row(i) += a.block(c.right(i), 2 * L, 1, L);
  }
  return u;
}

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

struct Messages {
  Eigen::MatrixXd alpha, beta;  // n x L, log-space
  double log_z = 0.0;
};

inline Messages messages(const Eigen::MatrixXd& u, const Eigen::MatrixXd& t) {
  const auto n = u.rows(), L = u.cols();
  Messages msg;
  msg.alpha.resize(n, L);
  msg.beta.resize(n, L);
  msg.alpha.row(0) = u.row(0);
  Eigen::VectorXd tmp(L);
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index y = 0; y < L; ++y) {
      tmp = msg.alpha.row(i - 1).transpose() + t.col(y);
      msg.alpha(i, y) = u(i, y) + log_sum_exp(tmp);
    }
  msg.beta.row(n - 1).setZero();
  for (Eigen::Index i = n - 1; i-- > 0;)
    for (Eigen::Index y = 0; y < L; ++y) {
      tmp = t.row(y).transpose() + u.row(i + 1).transpose() + msg.beta.row(i + 1).transpose();
      msg.beta(i, y) = log_sum_exp(tmp);
    }
  msg.log_z = log_sum_exp(msg.alpha.row(n - 1).transpose());
  return msg;
}

}  // namespace detail

struct Marginals {
  Eigen::MatrixXd node;  // n x L, rows on the simplex
  double log_partition = 0.0;
};

/// Exact sum-product in log space.
inline Marginals forward_backward(const CrfModel& m, const ChainInstance& c) {
  const Eigen::MatrixXd u = detail::unaries(m, c);
  const auto msg = detail::messages(u, m.T);
  Marginals out;
  out.log_partition = msg.log_z;
  out.node = ((msg.alpha + msg.beta).array() - msg.log_z).exp().matrix();
  for (Eigen::Index i = 0; i < out.node.rows(); ++i) out.node.row(i) /= out.node.row(i).sum();
  return out;
}

/// Score of a full labeling (0-based labels).
inline double sequence_score(const CrfModel& m, const ChainInstance& c, std::span<const int> y) {
  const Eigen::MatrixXd u = detail::unaries(m, c);
  double s = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    s += u(i, y[static_cast<std::size_t>(i)]);
    if (i > 0) s += m.T(y[static_cast<std::size_t>(i - 1)], y[static_cast<std::size_t>(i)]);
  }
  return s;
}

/// Viterbi; ties resolve toward the smaller label index. Returns 0-based labels.
inline std::vector<int> map_decode(const CrfModel& m, const ChainInstance& c) {
  const Eigen::MatrixXd u = detail::unaries(m, c);
  const int n = c.size(), L = m.labels;
  Eigen::MatrixXd delta(n, L);
  Eigen::MatrixXi back(n, L);
  delta.row(0) = u.row(0);
  for (int i = 1; i < n; ++i)
    for (int y = 0; y < L; ++y) {
      int arg = 0;
      double best = delta(i - 1, 0) + m.T(0, y);
      for (int p = 1; p < L; ++p) {
        const double v = delta(i - 1, p) + m.T(p, y);
        if (v > best) {
          best = v;
          arg = p;
        }
      }
      delta(i, y) = best + u(i, y);
      back(i, y) = arg;
    }
  std::vector<int> y(static_cast<std::size_t>(n));
  int arg = 0;
  for (int k = 1; k < L; ++k)
    if (delta(n - 1, k) > delta(n - 1, arg)) arg = k;
  y[static_cast<std::size_t>(n - 1)] = arg;
  for (int i = n - 1; i > 0; --i) y[static_cast<std::size_t>(i - 1)] = back(i, y[static_cast<std::size_t>(i)]);
  return y;
}

// ---------------------------------------------------------------------------
// Training objective

struct CrfObjective {
  double loss = 0.0;   // mean NLL per node + (lambda/2) * ||params||^2
  double nll = 0.0;    // mean NLL per node
  Eigen::MatrixXd grad_w;
  Eigen::MatrixXd grad_t;
};

/// All chains of a training set stacked into one design matrix so that the
/// unary products and the weight gradient are single matrix products.
struct CrfBatch {
  std::span<const ChainInstance> chains;
  Eigen::MatrixXd X;            // sum(n) x B
  std::vector<Eigen::Index> offset;
  Eigen::Index nodes = 0;

  explicit CrfBatch(std::span<const ChainInstance> cs) : chains(cs) {
    if (cs.empty()) throw EmptyInputError("empty training batch");
    const auto b = cs.front().base.cols();
    for (const auto& c : cs) {
      if (c.base.cols() != b) throw DimensionError("chains in a batch differ in feature dimension");
      offset.push_back(nodes);
      nodes += c.base.rows();
    }
    X.resize(nodes, b);
    for (std::size_t k = 0; k < cs.size(); ++k) X.middleRows(offset[k], cs[k].base.rows()) = cs[k].base;
  }
};

/// Negative log-likelihood normalised by node count, plus the L2 penalty.
inline CrfObjective nll_and_gradient(const CrfModel& m, const CrfBatch& batch) {
  const int L = m.labels, b = m.base_dim;
  const bool concat = m.features.concat;
  CrfObjective obj;
  obj.grad_t = Eigen::MatrixXd::Zero(L, L);
  if (batch.nodes == 0) throw EmptyInputError("empty training batch");
  for (const auto& c : batch.chains) detail::check_dims(m, c);

  const int blocks = concat ? 3 : 1;
  Eigen::MatrixXd stacked(blocks * L, b);
  for (int k = 0; k < blocks; ++k) stacked.middleRows(k * L, L) = m.W.middleCols(k * b, b);
  const Eigen::MatrixXd a = batch.X * stacked.transpose();  // N x blocks*L
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch.nodes, blocks * L);

  double nll = 0.0;
  for (std::size_t k = 0; k < batch.chains.size(); ++k) {
    const auto& c = batch.chains[k];
    const Eigen::Index off = batch.offset[k];
    const int n = c.size();
    if (c.labels.size() != static_cast<std::size_t>(n)) throw Error("chain lacks gold labels");
    for (int y : c.labels)
      if (y < 0 || y >= L) throw Error("gold label out of range");

    Eigen::MatrixXd u = concat ? Eigen::MatrixXd(a.block(off, L, n, L)) : Eigen::MatrixXd(a.block(off, 0, n, L));
    if (concat)
      for (int i = 0; i < n; ++i) {
        if (c.left(i) >= 0) u.row(i) += a.block(off + c.left(i), 0, 1, L);
        if (c.right(i) >= 0) u.row(i) += a.block(off + c.right(i), 2 * L, 1, L);
      }
    const auto msg = detail::messages(u, m.T);
    double gold = 0.0;
    for (int i = 0; i < n; ++i) {
      gold += u(i, c.labels[static_cast<std::size_t>(i)]);
      if (i > 0) gold += m.T(c.labels[static_cast<std::size_t>(i - 1)], c.labels[static_cast<std::size_t>(i)]);
    }
    nll += msg.log_z - gold;

    Eigen::MatrixXd g = ((msg.alpha + msg.beta).array() - msg.log_z).exp().matrix();
    for (int i = 0; i < n; ++i) g(i, c.labels[static_cast<std::size_t>(i)]) -= 1.0;

    for (int i = 1; i < n; ++i) {
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q)
          obj.grad_t(p, q) += std::exp(msg.alpha(i - 1, p) + m.T(p, q) + u(i, q) + msg.beta(i, q) - msg.log_z);
      obj.grad_t(c.labels[static_cast<std::size_t>(i - 1)], c.labels[static_cast<std::size_t>(i)]) -= 1.0;
    }

    for (int i = 0; i < n; ++i) {
      if (!concat) {
        h.block(off + i, 0, 1, L) += g.row(i);
        continue;
      }
      if (c.left(i) >= 0) h.block(off + c.left(i), 0, 1, L) += g.row(i);
      h.block(off + i, L, 1, L) += g.row(i);
      if (c.right(i) >= 0) h.block(off + c.right(i), 2 * L, 1, L) += g.row(i);
    }
  }

  const Eigen::MatrixXd gw = h.transpose() * batch.X;  // blocks*L x B
  obj.grad_w.resize(L, m.node_dim());
  for (int k = 0; k < blocks; ++k) obj.grad_w.middleCols(k * b, b) = gw.middleRows(k * L, L);

  const double inv = 1.0 / static_cast<double>(batch.nodes);
  obj.nll = nll * inv;
  obj.grad_w *= inv;
  obj.grad_t *= inv;
  obj.grad_w += m.lambda * m.W;
  obj.grad_t += m.lambda * m.T;
  obj.loss = obj.nll + 0.5 * m.lambda * m.squared_norm();
  return obj;
}

inline CrfObjective nll_and_gradient(const CrfModel& m, std::span<const ChainInstance> chains) {
  return nll_and_gradient(m, CrfBatch(chains));
}

struct CrfTrainConfig {
  double lambda = 0.01;
  double learning_rate = 0.5;
  int epochs = 150;
  bool step_halving = true;
  std::uint64_t seed = 1;  // initialisation is all-zero; kept for reproducibility records
};

struct CrfTrainResult {
  CrfModel model;
  std::vector<double> loss_curve;  // accepted losses, starting from the initial model
  double final_learning_rate = 0.0;
};

/// Full-batch gradient descent from zero weights. A step that raises the loss
/// is discarded and the learning rate halved.
inline CrfTrainResult train_crf(std::span<const ChainInstance> data, int labels, int base_dim,
                                const CrfFeatureConfig& features, const CrfTrainConfig& cfg = {}) {
  if (data.empty()) throw TrainingError("CRF training needs labeled chains");
  CrfTrainResult res;
  res.model = CrfModel::zeros(labels, base_dim, features, cfg.lambda);
  double lr = cfg.learning_rate;
  const CrfBatch batch(data);
  auto obj = nll_and_gradient(res.model, batch);
  if (!std::isfinite(obj.loss)) throw TrainingError("CRF loss is not finite at initialisation");
  res.loss_curve.push_back(obj.loss);
  int accepted = 0;
  while (accepted < cfg.epochs) {
    CrfModel next = res.model;
    next.W -= lr * obj.grad_w;
    next.T -= lr * obj.grad_t;
    auto nobj = nll_and_gradient(next, batch);
    const bool finite = std::isfinite(nobj.loss);
    if (!finite && !cfg.step_halving) throw TrainingError("CRF training diverged (non-finite loss)");
    if (cfg.step_halving && (!finite || nobj.loss > obj.loss)) {
      lr *= 0.5;
      if (lr < 1e-12) {
        if (!finite) throw TrainingError("CRF training diverged (non-finite loss at every step size)");
        break;  // no step size lowers the loss any more
      }
      continue;
    }
    res.model = std::move(next);
    obj = std::move(nobj);
    res.loss_curve.push_back(obj.loss);
    ++accepted;
  }
  res.final_learning_rate = lr;
  return res;
}

inline CrfTrainResult train_crf(std::span<const ChainInstance> data, const CrfFeatureConfig& features,
                                const CrfTrainConfig& cfg = {}) {
  return train_crf(data, kNumNumerals, features.base_dim(), features, cfg);
}

// ---------------------------------------------------------------------------

struct SliceLabeling {
  std::vector<int> labels;                 // 1-based, parallel to the input slices
  std::vector<std::vector<double>> posteriors;
  std::vector<double> map_posterior;       // max posterior entry per slice
  std::vector<int> chain_order;            // slice indices in chain order

  double mean_map_posterior() const {
    if (map_posterior.empty()) return 0.0;
    return std::accumulate(map_posterior.begin(), map_posterior.end(), 0.0) / static_cast<double>(map_posterior.size());
  }
};

inline SliceLabeling label_slices(const CrfModel& m, std::span<const STSlice> slices) {
  SliceLabeling out;
  if (slices.empty()) return out;
  const auto chain = build_chain(slices, m.features);
  const auto marg = forward_backward(m, chain);
  const auto y = map_decode(m, chain);
  out.labels.resize(slices.size());
  out.posteriors.resize(slices.size());
  out.map_posterior.resize(slices.size());
  for (int i = 0; i < chain.size(); ++i) {
    const auto s = static_cast<std::size_t>(chain.slice_index[static_cast<std::size_t>(i)]);
    out.labels[s] = y[static_cast<std::size_t>(i)] + 1;
    out.posteriors[s].resize(static_cast<std::size_t>(m.labels));
    for (int k = 0; k < m.labels; ++k) out.posteriors[s][static_cast<std::size_t>(k)] = marg.node(i, k);
    out.map_posterior[s] = marg.node.row(i).maxCoeff();
    out.chain_order.push_back(static_cast<int>(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

inline json crf_to_json(const CrfModel& m) {
  json j;
  j["format"] = kFileFormat;
  j["kind"] = "crf";
  j["labels"] = m.labels;
  j["base_dim"] = m.base_dim;
  j["lambda"] = m.lambda;
  j["features"] = {{"concat", m.features.concat},
                   {"context", m.features.context},
                   {"wrap", m.features.wrap},
                   {"downsample", m.features.downsample}};
  auto rows = [](const Eigen::MatrixXd& a) {
    json r = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      std::vector<double> v(static_cast<std::size_t>(a.cols()));
      for (Eigen::Index k = 0; k < a.cols(); ++k) v[static_cast<std::size_t>(k)] = a(i, k);
      r.push_back(std::move(v));
    }
    return r;
  };
  j["W"] = rows(m.W);
  j["T"] = rows(m.T);
  return j;
}

inline CrfModel crf_from_json(const json& j) {
  detail::check_format(j, "CRF model");
  if (j.value("kind", "") != "crf") throw ParseError("not a CRF model");
  CrfModel m;
  try {
    m.labels = j.at("labels").get<int>();
    m.base_dim = j.at("base_dim").get<int>();
    m.lambda = j.at("lambda").get<double>();
    const auto& f = j.at("features");
    m.features.concat = f.at("concat").get<bool>();
    m.features.context = f.at("context").get<bool>();
    m.features.wrap = f.at("wrap").get<bool>();
    m.features.downsample = f.at("downsample").get<bool>();
    auto read = [](const json& rows, Eigen::Index r, Eigen::Index c) {
      if (static_cast<Eigen::Index>(rows.size()) != r) throw DimensionError("CRF matrix row count mismatch");
      Eigen::MatrixXd a(r, c);
      for (Eigen::Index i = 0; i < r; ++i) {
        const auto v = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(v.size()) != c) throw DimensionError("CRF matrix column count mismatch");
        for (Eigen::Index k = 0; k < c; ++k) a(i, k) = v[static_cast<std::size_t>(k)];
      }
      return a;
    };
    m.W = read(j.at("W"), m.labels, m.node_dim());
    m.T = read(j.at("T"), m.labels, m.labels);
  } catch (const json::exception& e) {
    throw ParseError(std::string("CRF model: ") + e.what());
  }
  return m;
}

}  // namespace clockst
