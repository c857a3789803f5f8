#include "care/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace care {

std::string to_string(KForm form) {
  switch (form) {
    case KForm::PowerQuarter: return "quarter";
    case KForm::Step: return "step";
    case KForm::Exponential: return "exp";
    case KForm::Logarithmic: return "log";
    case KForm::Linear: return "linear";
    case KForm::Global: return "global";
  }
  return "unknown";
}

KForm k_form_from_string(const std::string& s) {
  if (s == "quarter" || s == "power-quarter") return KForm::PowerQuarter;
  if (s == "step") return KForm::Step;
  if (s == "exp" || s == "exponential") return KForm::Exponential;
  if (s == "log" || s == "logarithmic") return KForm::Logarithmic;
  if (s == "linear") return KForm::Linear;
  if (s == "global") return KForm::Global;
  throw ValidationError("unknown K form '" + s + "'");
}

std::uint64_t integer_fourth_root(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::pow(static_cast<double>(n), 0.25));
  auto fourth = [](unsigned __int128 k) { return k * k * k * k; };
  while (r > 0 && fourth(r) > n) --r;
  while (fourth(r + 1) <= n) ++r;
  return r;
}

KPolicy KPolicy::fitted(const ClassCounts& counts) const {
  KPolicy out = *this;
  std::vector<std::uint64_t> present;
  for (auto n : counts.counts) {
    if (n > 0) present.push_back(n);
  }
  if (present.empty()) return out;
  std::sort(present.begin(), present.end(), std::greater<>());
  out.n_max = present.front();
  out.n_min = present.back();

  // Frequency-sorted thirds: head = ceil(C/3), medium = ceil(rest/2).
  const std::size_t C = present.size();
  const std::size_t head = (C + 2) / 3;
  const std::size_t med = (C - head + 1) / 2;
  out.head_min_count = present[head - 1];
  out.med_min_count = med > 0 ? present[head + med - 1] : out.head_min_count;
  return out;
}

std::size_t compute_k(const KPolicy& policy, std::uint64_t n_c, std::size_t num_classes) {
  if (n_c == 0) throw ValidationError("K is undefined for an empty class");
  if (num_classes == 0) throw ValidationError("K needs at least one class");
  const double n = static_cast<double>(n_c);
  double k = 1.0;
  switch (policy.form) {
    case KForm::PowerQuarter:
      k = static_cast<double>(integer_fourth_root(n_c));
      break;
    case KForm::Exponential:
      k = std::round(std::pow(n, 0.25));
      break;
    case KForm::Logarithmic:
      k = std::floor(std::log(n));
      break;
    case KForm::Linear: {
      const double lo = static_cast<double>(policy.n_min);
      const double hi = static_cast<double>(policy.n_max);
      const double kmin = static_cast<double>(policy.k_min);
      const double kmax = static_cast<double>(policy.k_max);
      if (hi <= lo) {
        k = kmax;
      } else {
        const double t = std::clamp((n - lo) / (hi - lo), 0.0, 1.0);
        k = std::round(t * (kmax - kmin) + kmin);
      }
      break;
    }
    case KForm::Step:
      if (n_c >= policy.head_min_count) k = static_cast<double>(policy.k_head);
      else if (n_c >= policy.med_min_count) k = static_cast<double>(policy.k_med);
      else k = static_cast<double>(policy.k_tail);
      break;
    case KForm::Global:
      k = static_cast<double>(policy.global_k);
      break;
  }
  return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(num_classes)));
}

bool TopKSet::contains(ClassIndex c) const {
  return std::find(classes.begin(), classes.end(), c) != classes.end();
}

TopKSet topk(std::span<const double> probs, std::size_t k) {
  if (k < 1 || k > probs.size()) throw ValidationError("Top-K size out of range");
  std::vector<ClassIndex> order(probs.size());
  std::iota(order.begin(), order.end(), ClassIndex{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](ClassIndex a, ClassIndex b) {
                      return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
                    });
  order.resize(k);
  TopKSet out{std::move(order), 0.0};
  for (ClassIndex c : out.classes) out.mass += probs[c];
  return out;
}

double reliability_weight(std::span<const double>, const TopKSet& top, ClassIndex observed) {
  return top.contains(observed) ? top.mass : 1.0;
}

double class_contribution(std::span<const double> probs, const TopKSet& top, ClassIndex c) {
  return top.contains(c) ? probs[c] : 0.0;
}

void accumulate(FrequencyMatrix& F, std::size_t i, std::span<const ExpertVote> votes,
                ClassIndex observed, double be_weight) {
  const std::size_t C = F.num_classes();
  std::vector<double> increment(C, 0.0);
  for (const auto& vote : votes) {
    const double alpha = reliability_weight(vote.probs, vote.top, observed);
    for (ClassIndex c : vote.top.classes) increment[c] += alpha * class_contribution(vote.probs, vote.top, c);
  }
  increment[observed] += be_weight;
  F.add_to_row(i, increment);
}

RectifiedState rectify(const FrequencyMatrix& F) {
  const std::size_t N = F.num_samples();
  const std::size_t C = F.num_classes();
  RectifiedState out;
  out.labels.resize(N);
  for (std::size_t i = 0; i < N; ++i) out.labels[i] = static_cast<ClassIndex>(argmax(F.row(i)));
  out.counts = ClassCounts::from_labels(out.labels, C, F.epoch());
  out.prior.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    out.prior[c] = N ? static_cast<double>(out.counts.counts[c]) / static_cast<double>(N) : 0.0;
  }
  return out;
}

ConsensusState ConsensusState::initial(std::span<const ClassIndex> observed, std::size_t num_classes,
                                       double be_weight) {
  if (!(be_weight > 0.0 && be_weight <= 1.0)) throw ValidationError("be_weight must lie in (0, 1]");
  ConsensusState s;
  s.frequency = FrequencyMatrix::from_labels(observed, num_classes, be_weight);
  s.rectified.labels.assign(observed.begin(), observed.end());
  s.rectified.counts = ClassCounts::from_labels(observed, num_classes, 0);
  s.rectified.prior.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    s.rectified.prior[c] = static_cast<double>(s.rectified.counts.counts[c]) / static_cast<double>(observed.size());
  }
  return s;
}

void epoch_consensus(ConsensusState& state, std::span<const ClassIndex> observed,
                     std::span<const Matrix* const> experts, const KPolicy& policy,
                     const ConsensusOptions& options) {
  FrequencyMatrix& F = state.frequency;
  const std::size_t N = F.num_samples();
  const std::size_t C = F.num_classes();
  if (observed.size() != N || state.rectified.labels.size() != N) {
    throw ValidationError("consensus state does not match the label vector");
  }
  for (const Matrix* m : experts) {
    if (m == nullptr || m->rows() != N || m->cols() != C) {
      throw ValidationError("expert confidence matrix shape mismatch");
    }
  }

  const ClassCounts& prev_counts = state.rectified.counts;
  const KPolicy active = policy.fitted(prev_counts);
  std::vector<std::size_t> k_of_class(C, 0);
  for (std::size_t c = 0; c < C; ++c) {
    if (prev_counts.counts[c] > 0) k_of_class[c] = compute_k(active, prev_counts.counts[c], C);
  }

  std::vector<ExpertVote> votes(experts.size());
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t k = k_of_class[state.rectified.labels[i]];
    for (std::size_t m = 0; m < experts.size(); ++m) {
      votes[m].probs = experts[m]->row(i);
      votes[m].top = topk(votes[m].probs, k);
    }
    accumulate(F, i, votes, observed[i], options.be_weight);
  }
  F.set_epoch(F.epoch() + 1);
  state.rectified = rectify(F);
}

}  // namespace care
