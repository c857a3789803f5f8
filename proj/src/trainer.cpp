#include "care/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "care/metrics.hpp"
#include "care/rng.hpp"

namespace care {

std::string to_string(LossKind kind) { return kind == LossKind::LA ? "la" : "ce"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "la" || s == "LA") return LossKind::LA;
  if (s == "ce" || s == "CE") return LossKind::CE;
  throw ValidationError("unknown loss '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
}

namespace {

// log-sum-exp of the adjusted logits minus the target's adjusted logit.
double adjusted_nll(std::span<const double> adjusted, ClassIndex y) {
  const double m = *std::max_element(adjusted.begin(), adjusted.end());
  double sum = 0.0;
  for (double a : adjusted) sum += std::exp(a - m);
  return std::max(0.0, m + std::log(sum) - adjusted[y]);
}

}  // namespace

double la_loss(std::span<const double> logits, ClassIndex y, std::span<const double> prior) {
  if (y >= logits.size()) throw ValidationError("target class out of range");
  if (prior.size() != logits.size()) throw ValidationError("prior length does not match logits");
  std::vector<double> adjusted(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!(prior[j] > 0.0)) throw ValidationError("logit adjustment needs a strictly positive prior");
    adjusted[j] = logits[j] + std::log(prior[j]);
  }
  return adjusted_nll(adjusted, y);
}

double ce_loss(std::span<const double> logits, ClassIndex y) {
  if (y >= logits.size()) throw ValidationError("target class out of range");
  return adjusted_nll(logits, y);
}

std::vector<double> smoothed_prior(const ClassCounts& counts) {
  const double denom = static_cast<double>(counts.total() + counts.num_classes());
  std::vector<double> prior(counts.num_classes());
  for (std::size_t c = 0; c < prior.size(); ++c) prior[c] = (static_cast<double>(counts.counts[c]) + 1.0) / denom;
  return prior;
}

LossAndGrad la_loss_and_grad(const CosineHead& head, const Matrix& features,
                             std::span<const std::size_t> batch, std::span<const ClassIndex> labels,
                             std::span<const double> prior) {
  const std::size_t C = head.num_classes();
  const std::size_t D = head.feature_dim();
  if (features.cols() != D) throw ValidationError("feature dim does not match head");
  if (!prior.empty() && prior.size() != C) throw ValidationError("prior length does not match head");

  std::vector<double> inv_norm(C), log_prior(C, 0.0);
  Matrix unit(C, D);
  for (std::size_t c = 0; c < C; ++c) {
    const double n = l2_norm(head.weights.row(c));
    if (!(n > 0.0)) throw ValidationError("cosine head row has zero norm");
    inv_norm[c] = 1.0 / n;
    for (std::size_t k = 0; k < D; ++k) unit(c, k) = head.weights(c, k) * inv_norm[c];
    if (!prior.empty()) {
      if (!(prior[c] > 0.0)) throw ValidationError("logit adjustment needs a strictly positive prior");
      log_prior[c] = std::log(prior[c]);
    }
  }

  LossAndGrad out{0.0, Matrix(C, D)};
  if (batch.empty()) return out;
  std::vector<double> cosine(C), adjusted(C);
  for (std::size_t idx : batch) {
    const auto f = features.row(idx);
    const ClassIndex y = labels[idx];
    for (std::size_t c = 0; c < C; ++c) {
      cosine[c] = dot(unit.row(c), f);
      adjusted[c] = head.scale * cosine[c] + log_prior[c];
    }
    out.loss += adjusted_nll(adjusted, y);
    const auto p = softmax(adjusted);
    for (std::size_t c = 0; c < C; ++c) {
      // dz_c/dw_c = s/|w_c| (f - cos * w_c/|w_c|)
      const double dz = p[c] - (c == y ? 1.0 : 0.0);
      if (dz == 0.0) continue;
      const double coef = dz * head.scale * inv_norm[c];
      auto g = out.grad.row(c);
      const auto u = unit.row(c);
      for (std::size_t k = 0; k < D; ++k) g[k] += coef * (f[k] - cosine[c] * u[k]);
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv_b;
  for (double& g : out.grad.data()) g *= inv_b;
  return out;
}

Matrix la_grad(const CosineHead& head, const Matrix& features, std::span<const std::size_t> batch,
               std::span<const ClassIndex> labels, std::span<const double> prior) {
  return la_loss_and_grad(head, features, batch, labels, prior).grad;
}

void sgd_step(CosineHead& head, const Matrix& grad, OptimizerState& opt, const TrainConfig& cfg) {
  if (grad.rows() != head.weights.rows() || grad.cols() != head.weights.cols()) {
    throw ValidationError("gradient shape does not match head");
  }
  for (double g : grad.data()) {
    if (!std::isfinite(g)) throw ValidationError("non-finite gradient");
  }
  if (opt.velocity.rows() != grad.rows() || opt.velocity.cols() != grad.cols()) {
    opt.velocity = Matrix(grad.rows(), grad.cols());
  }
  auto& w = head.weights.data();
  auto& v = opt.velocity.data();
  const auto& g = grad.data();
  for (std::size_t k = 0; k < w.size(); ++k) {
    v[k] = cfg.momentum * v[k] + g[k] + cfg.weight_decay * w[k];
    w[k] -= cfg.learning_rate * v[k];
  }
  head.normalize_rows();
  ++opt.step;
}

Labels head_predictions(const CosineHead& head, const Dataset& d) {
  Labels out(d.num_samples());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<ClassIndex>(argmax(head.logits(d.features.row(i))));
  }
  return out;
}

EpochRecord describe_epoch(const Dataset& d, std::size_t epoch, std::span<const ClassIndex> rectified,
                           std::span<const ClassIndex> predictions, const ClassCounts& counts) {
  EpochRecord r;
  r.epoch = epoch;
  r.class_counts = counts.counts;
  if (!d.true_labels) return r;
  const auto& truth = *d.true_labels;
  const auto split = group_split(ClassCounts::from_labels(truth, d.num_classes));
  const auto nr = noise_rate_by_group(rectified, truth, split);
  r.nr_overall = nr.overall;
  r.nr_head = nr.head;
  r.nr_med = nr.med;
  r.nr_tail = nr.tail;
  r.acc_eval = accuracy(predictions, truth);
  r.macro_f1 = macro_f1(predictions, truth, d.num_classes);
  const auto ga = group_accuracy(predictions, truth, split);
  r.acc_head = ga[0];
  r.acc_med = ga[1];
  r.acc_tail = ga[2];
  return r;
}

namespace {

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed, Stream::Shuffle, epoch);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace

RunReport run_care(const Dataset& d, const TrainConfig& cfg, const RunOptions& options) {
  require_valid(d);
  cfg.validate();
  const std::size_t N = d.num_samples();
  const std::size_t C = d.num_classes;
  for (const auto* m : {&options.te_override, &options.ie_override}) {
    if (*m && ((*m)->rows() != N || (*m)->cols() != C)) throw ValidationError("expert file shape mismatch");
  }

  RunReport report;
  report.head = CosineHead::random(C, d.feature_dim(), options.scale, cfg.seed);
  OptimizerState opt;

  ConsensusState state = ConsensusState::initial(d.observed_labels, C, options.be_weight);
  report.initial = describe_epoch(d, 0, state.rectified.labels, head_predictions(report.head, d),
                                  state.rectified.counts);

  Matrix te;
  if (options.use_te) te = options.te_override ? *options.te_override : te_confidences(d, options.scale);
  const ConsensusOptions consensus{options.be_weight};

  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    Matrix ie;
    if (options.use_ie) ie = options.ie_override ? *options.ie_override : ie_confidences(report.head, d);
    std::vector<const Matrix*> experts;
    if (options.use_te) experts.push_back(&te);
    if (options.use_ie) experts.push_back(&ie);
    epoch_consensus(state, d.observed_labels, experts, options.policy, consensus);
    if (options.on_consensus) options.on_consensus(e, state);

    const auto prior = cfg.loss == LossKind::LA ? smoothed_prior(state.rectified.counts) : std::vector<double>{};
    const auto order = epoch_permutation(N, cfg.seed, e);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < N; start += cfg.batch_size) {
      const std::size_t stop = std::min(N, start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const auto lg = la_loss_and_grad(report.head, d.features, batch, state.rectified.labels, prior);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      sgd_step(report.head, lg.grad, opt, cfg);
    }

    auto rec = describe_epoch(d, e, state.rectified.labels, head_predictions(report.head, d),
                              state.rectified.counts);
    rec.train_loss = loss_sum / static_cast<double>(N);
    report.epochs.push_back(std::move(rec));
  }

  report.final_state = state.rectified;
  report.predictions = head_predictions(report.head, d);
  return report;
}

}  // namespace care
