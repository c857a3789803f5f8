#include "care/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace care {

void draw_confidence_into(CounterRng& rng, std::span<double> p, ClassIndex y, const ConfidenceGenerator& gen) {
  double sum = 0.0;
  if (gen.concentration == 1.0) {
    for (double& x : p) {
      x = -std::log(1.0 - rng.uniform());
      sum += x;
    }
  } else {
    std::gamma_distribution<double> gamma(gen.concentration, 1.0);
    for (double& x : p) {
      x = gamma(rng);
      sum += x;
    }
  }
  const double uniform_share = 1.0 / static_cast<double>(p.size());
  const double scale = sum > 0.0 ? (1.0 - gen.advantage) / sum : 0.0;
  for (double& x : p) x = sum > 0.0 ? x * scale : (1.0 - gen.advantage) * uniform_share;
  p[y] += gen.advantage;
}

std::vector<double> draw_confidence(CounterRng& rng, std::size_t num_classes, ClassIndex y,
                                    const ConfidenceGenerator& gen) {
  std::vector<double> p(num_classes);
  draw_confidence_into(rng, p, y, gen);
  return p;
}

namespace {

// Number of classes ranked ahead of c (higher confidence, or equal with a lower index).
std::size_t rank_of(std::span<const double> p, std::size_t c) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > p[c] || (p[j] == p[c] && j < c)) ++r;
  }
  return r;
}

void check_generator(const ConfidenceGenerator& gen) {
  if (!(gen.advantage >= 0.0 && gen.advantage <= 1.0)) throw ValidationError("advantage must lie in [0, 1]");
  if (!(gen.concentration > 0.0)) throw ValidationError("concentration must be positive");
}

}  // namespace

Theorem1Result mc_theorem1(const TheoryTrialConfig& cfg) {
  check_generator(cfg.generator);
  const std::size_t C = cfg.num_classes;
  if (C < 2) throw ValidationError("theorem trials need at least two classes");
  if (cfg.k < 1 || cfg.k > C) throw ValidationError("K out of range");
  if (cfg.trials == 0) throw ValidationError("need at least one trial");

  std::vector<std::uint64_t> joint(C, 0);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    CounterRng rng(cfg.seed, Stream::TheoryTrials, t);
    const auto te = draw_confidence(rng, C, 0, cfg.generator);
    const auto ie = draw_confidence(rng, C, 0, cfg.generator);
    for (std::size_t c = 0; c < C; ++c) {
      if (rank_of(te, c) < cfg.k && rank_of(ie, c) < cfg.k) ++joint[c];
    }
  }
  Theorem1Result out;
  out.trials = cfg.trials;
  const double n = static_cast<double>(cfg.trials);
  out.joint_prob_true = static_cast<double>(joint[0]) / n;
  out.max_joint_prob_wrong = static_cast<double>(*std::max_element(joint.begin() + 1, joint.end())) / n;
  out.ratio = out.max_joint_prob_wrong > 0.0 ? out.joint_prob_true / out.max_joint_prob_wrong
                                             : std::numeric_limits<double>::infinity();
  return out;
}

PropositionSamples sample_tail_ranks(const PropositionConfig& cfg) {
  check_generator(cfg.generator);
  const std::size_t C = cfg.num_classes;
  if (C < 2) throw ValidationError("proposition trials need at least two classes");
  if (cfg.trials == 0 || cfg.num_experts == 0) throw ValidationError("need trials and experts");

  const auto tail = static_cast<ClassIndex>(C - 1);
  PropositionSamples out;
  out.num_classes = C;
  out.trials = cfg.trials;
  out.ranked.assign(cfg.trials * C, 0);
  out.ranked_correct.assign(cfg.trials * C, 0);
  std::vector<double> p(C);

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    CounterRng rng(cfg.seed, Stream::PropositionTrials, t);
    std::uint32_t* ranked = out.ranked.data() + t * C;
    std::uint32_t* correct = out.ranked_correct.data() + t * C;
    auto visit = [&](ClassIndex y) {
      for (std::size_t m = 0; m < cfg.num_experts; ++m) {
        draw_confidence_into(rng, p, y, cfg.generator);
        const std::size_t r = rank_of(p, tail);
        ++ranked[r];
        if (y == tail) ++correct[r];
      }
    };
    for (std::uint64_t s = 0; s < cfg.tail_count; ++s) visit(tail);
    for (ClassIndex c = 0; c < tail; ++c) {
      for (std::uint64_t s = 0; s < cfg.other_count; ++s) visit(c);
    }
  }
  return out;
}

PropositionResult evaluate_k_pair(const PropositionSamples& samples, const PropositionConfig& cfg) {
  const std::size_t C = samples.num_classes;
  if (cfg.k_tail < 1 || cfg.k_global < 1 || cfg.k_tail > C || cfg.k_global > C) {
    throw ValidationError("K out of range");
  }
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");

  struct TrialCounts {
    std::uint64_t inc_kt = 0, cor_kt = 0, inc_k = 0, cor_k = 0;
  };
  std::vector<TrialCounts> per_trial(samples.trials);
  PropositionResult out;
  out.trials = samples.trials;
  for (std::size_t t = 0; t < samples.trials; ++t) {
    TrialCounts& tc = per_trial[t];
    for (std::size_t r = 0; r < C; ++r) {
      const std::uint64_t n = samples.ranked[t * C + r];
      const std::uint64_t ok = samples.ranked_correct[t * C + r];
      if (r < cfg.k_tail) {
        tc.inc_kt += n;
        tc.cor_kt += ok;
      }
      if (r < cfg.k_global) {
        tc.inc_k += n;
        tc.cor_k += ok;
      }
    }
    out.at_k_tail.included += tc.inc_kt;
    out.at_k_tail.correct += tc.cor_kt;
    out.at_k_global.included += tc.inc_k;
    out.at_k_global.correct += tc.cor_k;
    if (tc.inc_kt == 0 || tc.inc_k == 0) ++out.degenerate_trials;
  }
  out.margin = out.at_k_tail.precision() - out.at_k_global.precision();

  if (cfg.bootstrap_resamples > 0) {
    std::vector<double> margins(cfg.bootstrap_resamples);
    for (std::size_t b = 0; b < cfg.bootstrap_resamples; ++b) {
      CounterRng rng(cfg.seed, Stream::Bootstrap, b);
      ConsensusPrecisionStats kt, k;
      for (std::size_t s = 0; s < samples.trials; ++s) {
        const auto& tc = per_trial[rng.below(samples.trials)];
        kt.included += tc.inc_kt;
        kt.correct += tc.cor_kt;
        k.included += tc.inc_k;
        k.correct += tc.cor_k;
      }
      margins[b] = kt.precision() - k.precision();
    }
    std::sort(margins.begin(), margins.end());
    const double tail_mass = (1.0 - cfg.confidence) / 2.0;
    auto quantile = [&](double q) {
      const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(margins.size() - 1)));
      return margins[std::min(idx, margins.size() - 1)];
    };
    out.ci_low = quantile(tail_mass);
    out.ci_high = quantile(1.0 - tail_mass);
  } else {
    out.ci_low = out.ci_high = out.margin;
  }
  return out;
}

PropositionResult mc_proposition1(const PropositionConfig& cfg) {
  const std::size_t C = cfg.num_classes;
  if (cfg.k_tail < 1 || cfg.k_global < 1 || cfg.k_tail > C || cfg.k_global > C) {
    throw ValidationError("K out of range");
  }
  return evaluate_k_pair(sample_tail_ranks(cfg), cfg);
}

// --- Oracle ------------------------------------------------------------------
// Deliberately shares nothing with the consensus implementation beyond the
// KPolicy parameter struct.

namespace {

std::size_t oracle_k(const KPolicy& policy, const std::vector<std::uint64_t>& counts, std::uint64_t n,
                     std::size_t C) {
  std::vector<std::uint64_t> present;
  for (auto x : counts) {
    if (x) present.push_back(x);
  }
  std::sort(present.rbegin(), present.rend());
  long k = 1;
  switch (policy.form) {
    case KForm::PowerQuarter: {
      std::uint64_t r = 1;
      while ((r + 1) * (r + 1) * (r + 1) * (r + 1) <= n) ++r;
      k = static_cast<long>(r);
      break;
    }
    case KForm::Exponential:
      k = std::lround(std::pow(static_cast<double>(n), 0.25));
      break;
    case KForm::Logarithmic:
      k = static_cast<long>(std::floor(std::log(static_cast<double>(n))));
      break;
    case KForm::Linear: {
      const double lo = static_cast<double>(present.back());
      const double hi = static_cast<double>(present.front());
      if (hi == lo) {
        k = static_cast<long>(policy.k_max);
      } else {
        double frac = (static_cast<double>(n) - lo) / (hi - lo);
        frac = std::min(1.0, std::max(0.0, frac));
        k = std::lround(frac * static_cast<double>(policy.k_max - policy.k_min) + static_cast<double>(policy.k_min));
      }
      break;
    }
    case KForm::Step: {
      const std::size_t m = present.size();
      const std::size_t head = (m + 2) / 3;
      const std::size_t med = (m - head + 1) / 2;
      const std::uint64_t head_min = present[head - 1];
      const std::uint64_t med_min = med ? present[head + med - 1] : head_min;
      k = static_cast<long>(n >= head_min ? policy.k_head : (n >= med_min ? policy.k_med : policy.k_tail));
      break;
    }
    case KForm::Global:
      k = static_cast<long>(policy.global_k);
      break;
  }
  if (k < 1) k = 1;
  if (k > static_cast<long>(C)) k = static_cast<long>(C);
  return static_cast<std::size_t>(k);
}

}  // namespace

Matrix brute_force_frequency(const OracleInstance& inst) {
  const std::size_t N = inst.observed.size();
  const std::size_t C = inst.num_classes;
  if (N > kOracleMaxSamples || C > kOracleMaxClasses) throw ValidationError("oracle size guard exceeded");

  Matrix F(N, C);
  for (std::size_t i = 0; i < N; ++i) F(i, inst.observed[i]) = inst.be_weight;
  Labels labels = inst.observed;

  for (const auto& epoch : inst.confidences) {
    std::vector<std::uint64_t> counts(C, 0);
    for (auto y : labels) counts[y] += 1;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t K = oracle_k(inst.policy, counts, counts[labels[i]], C);
      const ClassIndex yt = inst.observed[i];
      for (const Matrix& probs : epoch) {
        const auto p = probs.row(i);
        double mass = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
          if (rank_of(p, j) < K) mass += p[j];
        }
        const double alpha = rank_of(p, yt) < K ? mass : 1.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double g = rank_of(p, c) < K ? p[c] : 0.0;
          F(i, c) += alpha * g;
        }
      }
      F(i, yt) += inst.be_weight;
    }
    for (std::size_t i = 0; i < N; ++i) {
      ClassIndex best = 0;
      for (ClassIndex c = 1; c < C; ++c) {
        if (F(i, c) > F(i, best)) best = c;
      }
      labels[i] = best;
    }
  }
  return F;
}

Matrix consensus_frequency(const OracleInstance& inst) {
  ConsensusState state = ConsensusState::initial(inst.observed, inst.num_classes, inst.be_weight);
  for (const auto& epoch : inst.confidences) {
    std::vector<const Matrix*> experts;
    for (const auto& m : epoch) experts.push_back(&m);
    epoch_consensus(state, inst.observed, experts, inst.policy, ConsensusOptions{inst.be_weight});
  }
  return state.frequency.values();
}

OracleComparison compare_with_oracle(std::size_t instances, std::uint64_t seed) {
  constexpr KForm kForms[] = {KForm::PowerQuarter, KForm::Step, KForm::Exponential,
                              KForm::Logarithmic, KForm::Linear, KForm::Global};
  OracleComparison out;
  for (std::size_t t = 0; t < instances; ++t) {
    CounterRng rng(seed, Stream::Instances, t);
    OracleInstance inst;
    inst.num_classes = 1 + rng.below(5);
    const std::size_t N = 1 + rng.below(20);
    const std::size_t C = inst.num_classes;
    inst.observed.resize(N);
    for (auto& y : inst.observed) y = static_cast<ClassIndex>(rng.below(C));
    inst.policy.form = kForms[t % std::size(kForms)];
    inst.policy.global_k = 1 + rng.below(3);
    inst.policy.k_head = 3;
    inst.policy.k_med = 2;
    inst.policy.k_tail = 1;
    inst.policy.k_min = 1;
    inst.policy.k_max = 3;
    inst.be_weight = rng.below(2) ? 1.0 : 0.5;

    const std::size_t epochs = 1 + rng.below(4);
    const std::size_t experts = rng.below(3);  // 0, 1 or 2 auxiliary experts
    const bool coarse = rng.below(4) == 0;     // quantized rows exercise tie-breaking
    inst.confidences.resize(epochs);
    for (auto& epoch : inst.confidences) {
      for (std::size_t m = 0; m < experts; ++m) {
        Matrix probs(N, C);
        for (std::size_t i = 0; i < N; ++i) {
          auto row = probs.row(i);
          double sum = 0.0;
          for (double& x : row) {
            x = coarse ? static_cast<double>(rng.below(3)) : -std::log1p(-rng.uniform());
            sum += x;
          }
          if (sum == 0.0) {
            for (double& x : row) x = 1.0 / static_cast<double>(C);
          } else {
            for (double& x : row) x /= sum;
          }
        }
        epoch.push_back(std::move(probs));
      }
    }

    const Matrix expected = brute_force_frequency(inst);
    const Matrix actual = consensus_frequency(inst);
    for (std::size_t k = 0; k < expected.data().size(); ++k) {
      out.max_abs_diff = std::max(out.max_abs_diff, std::abs(expected.data()[k] - actual.data()[k]));
    }
    // Rows whose two largest entries are tied to rounding level carry no decision.
    for (std::size_t i = 0; i < N; ++i) {
      const auto row = expected.row(i);
      const std::size_t top = argmax(row);
      double runner_up = -1.0;
      for (std::size_t c = 0; c < C; ++c) {
        if (c != top) runner_up = std::max(runner_up, row[c]);
      }
      if (row[top] - runner_up <= 1e-9) continue;
      if (argmax(actual.row(i)) != top) out.labels_match = false;
    }
    ++out.instances;
  }
  return out;
}

RunReport ablation_single_expert(const Dataset& d, ExpertCombo which, double be_weight, const TrainConfig& cfg,
                                 RunOptions options) {
  return ablation_outcome(d, which, be_weight, cfg, std::move(options)).report;
}

AblationOutcome ablation_outcome(const Dataset& d, ExpertCombo which, double be_weight, const TrainConfig& cfg,
                                 RunOptions options) {
  options.be_weight = be_weight;
  options.use_te = which != ExpertCombo::ImageOnly;
  options.use_ie = which != ExpertCombo::TextOnly;
  AblationOutcome out;
  auto user_hook = options.on_consensus;
  options.on_consensus = [&](std::size_t e, const ConsensusState& s) {
    if (s.rectified.labels != d.observed_labels) out.labels_never_moved = false;
    if (user_hook) user_hook(e, s);
  };
  out.report = run_care(d, cfg, options);
  if (out.report.initial.nr_overall) out.initial_nr = *out.report.initial.nr_overall;
  if (!out.report.epochs.empty() && out.report.epochs.back().nr_overall) {
    out.final_nr = *out.report.epochs.back().nr_overall;
  }
  return out;
}

}  // namespace care
