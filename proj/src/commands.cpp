#include "care/commands.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "care/experts.hpp"
#include "care/io.hpp"
#include "care/metrics.hpp"
#include "care/synth.hpp"
#include "care/verify.hpp"

namespace care {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

json to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},       {"nr_overall", opt(r.nr_overall)}, {"nr_head", opt(r.nr_head)},
              {"nr_med", opt(r.nr_med)}, {"nr_tail", opt(r.nr_tail)},       {"train_loss", opt(r.train_loss)},
              {"acc_eval", opt(r.acc_eval)}, {"macro_f1", opt(r.macro_f1)}, {"acc_head", opt(r.acc_head)},
              {"acc_med", opt(r.acc_med)}, {"acc_tail", opt(r.acc_tail)},   {"class_counts", r.class_counts}};
}

Dataset synthesize(const RunConfig& cfg) {
  cfg.validate();
  const auto counts = longtail_profile(cfg.imbalance_spec());
  return inject_noise(synth_features(counts, cfg.cluster_spec()), cfg.noise_spec());
}

Dataset cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  Dataset d = synthesize(cfg);
  json meta;
  meta["generator"] = cfg;
  meta["empirical_noise_rate"] = empirical_noise_rate(d);
  save_dataset(out_dir, d, meta.dump());
  return d;
}

RunReport cmd_rectify(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir) {
  cfg.validate();
  const Dataset d = load_dataset(dataset_dir);

  RunOptions options;
  options.policy = cfg.k_policy();
  options.scale = cfg.scale;
  options.be_weight = cfg.be_weight;
  if (!cfg.te_file.empty()) options.te_override = load_confidence_file(cfg.te_file, d.num_samples(), d.num_classes);
  if (!cfg.ie_file.empty()) options.ie_override = load_confidence_file(cfg.ie_file, d.num_samples(), d.num_classes);

  RunReport report = run_care(d, cfg.train_config(), options);

  ensure_dir(out_dir);
  std::ostringstream jsonl, csv;
  csv << "epoch,nr_overall,nr_head,nr_med,nr_tail\n";
  auto csv_row = [&](const EpochRecord& r) {
    auto cell = [](const std::optional<double>& v) { return v ? json(*v).dump() : std::string(); };
    csv << r.epoch << ',' << cell(r.nr_overall) << ',' << cell(r.nr_head) << ',' << cell(r.nr_med) << ','
        << cell(r.nr_tail) << '\n';
  };
  csv_row(report.initial);
  for (const auto& r : report.epochs) {
    jsonl << to_json(r).dump() << '\n';
    csv_row(r);
  }
  write_text(out_dir / "metrics.jsonl", jsonl.str());
  write_text(out_dir / "curves.csv", csv.str());
  write_labels(out_dir / "rectified_labels.u32", report.final_state.labels);
  write_labels(out_dir / "predictions.u32", report.predictions);
  write_matrix(out_dir / "head.f64", report.head.weights, DType::F64);

  json summary;
  summary["config"] = cfg;
  summary["dataset"] = fs::absolute(dataset_dir).lexically_normal().string();
  summary["initial"] = to_json(report.initial);
  summary["final"] = report.epochs.empty() ? json(nullptr) : to_json(report.epochs.back());
  summary["prior"] = report.final_state.prior;
  summary["class_counts"] = report.final_state.counts.counts;
  write_text(out_dir / "report.json", summary.dump(2) + "\n");
  return report;
}

VerifyOutcome cmd_verify(const RunConfig& cfg) {
  cfg.validate();
  const auto& v = cfg.verify;
  VerifyOutcome out;
  if (v.trials < kMinStatisticalTrials) {
    out.warnings.push_back("trials=" + std::to_string(v.trials) + " is below the statistical minimum of " +
                           std::to_string(kMinStatisticalTrials) + "; results are indicative only");
  }
  const ConfidenceGenerator gen{v.advantage, v.concentration};

  TheoryTrialConfig tcfg;
  tcfg.trials = v.trials;
  tcfg.num_classes = v.theorem_classes;
  tcfg.k = v.theorem_k;
  tcfg.generator = gen;
  tcfg.seed = cfg.seed;
  const auto thm = mc_theorem1(tcfg);
  const double threshold = v.theorem_threshold > 0.0 ? v.theorem_threshold : kTheorem1Threshold;
  const bool thm_pass = thm.ratio >= threshold;
  out.report["theorem1"] = {{"ratio", std::isinf(thm.ratio) ? json("inf") : json(thm.ratio)},
                            {"joint_prob_true", thm.joint_prob_true},
                            {"max_joint_prob_wrong", thm.max_joint_prob_wrong},
                            {"threshold", threshold},
                            {"trials", thm.trials},
                            {"pass", thm_pass}};

  PropositionConfig pcfg;
  pcfg.trials = v.trials;
  pcfg.num_classes = v.prop_classes;
  pcfg.tail_count = v.prop_tail_count;
  pcfg.other_count = v.prop_other_count;
  pcfg.k_tail = v.k_tail;
  pcfg.k_global = v.k_global;
  pcfg.generator = gen;
  pcfg.bootstrap_resamples = v.bootstrap;
  pcfg.seed = cfg.seed;
  const auto prop = mc_proposition1(pcfg);
  const bool prop_pass = prop.ci_low > 0.0;
  out.report["proposition1"] = {{"margin", prop.margin},
                                {"ci", {prop.ci_low, prop.ci_high}},
                                {"precision_k_tail", prop.at_k_tail.precision()},
                                {"precision_k_global", prop.at_k_global.precision()},
                                {"k_pair", {v.k_tail, v.k_global}},
                                {"degenerate_trials", prop.degenerate_trials},
                                {"pass", prop_pass}};

  const auto oracle = compare_with_oracle(v.oracle_instances, cfg.seed);
  const bool oracle_pass = oracle.max_abs_diff <= 1e-12 && oracle.labels_match;
  out.report["oracle"] = {{"max_abs_diff", oracle.max_abs_diff},
                          {"instances", oracle.instances},
                          {"labels_match", oracle.labels_match},
                          {"pass", oracle_pass}};

  bool ablation_pass = true;
  if (v.run_ablation) {
    const Dataset d = synthesize(cfg);
    const auto train = cfg.train_config();
    RunOptions base;
    base.policy = cfg.k_policy();
    base.scale = cfg.scale;
    auto entry = [&](ExpertCombo combo, double weight, bool expect_unchanged) {
      const auto res = ablation_outcome(d, combo, weight, train, base);
      const bool pass = expect_unchanged ? (res.labels_never_moved && res.final_nr == res.initial_nr)
                                         : res.final_nr < res.initial_nr;
      ablation_pass = ablation_pass && pass;
      return json{{"be_weight", weight},
                  {"initial_nr", res.initial_nr},
                  {"final_nr", res.final_nr},
                  {"labels_never_moved", res.labels_never_moved},
                  {"pass", pass}};
    };
    out.report["ablation"] = {{"be_te", entry(ExpertCombo::TextOnly, 1.0, true)},
                              {"be_ie", entry(ExpertCombo::ImageOnly, 1.0, true)},
                              {"be_te_ie", entry(ExpertCombo::Both, 1.0, false)},
                              {"be_ie_half_weight", entry(ExpertCombo::ImageOnly, 0.5, false)},
                              {"pass", ablation_pass}};
  }

  out.report["warnings"] = out.warnings;
  out.all_passed = thm_pass && prop_pass && oracle_pass && ablation_pass;
  out.report["pass"] = out.all_passed;
  return out;
}

json cmd_evaluate(const fs::path& run_dir, const fs::path& dataset_dir) {
  const Dataset d = load_dataset(dataset_dir);
  const Labels rectified = read_labels(run_dir / "rectified_labels.u32");
  const Labels predictions = read_labels(run_dir / "predictions.u32");
  if (rectified.size() != d.num_samples() || predictions.size() != d.num_samples()) {
    throw ValidationError("run artifacts do not match the dataset size");
  }
  json out;
  out["num_samples"] = d.num_samples();
  out["num_classes"] = d.num_classes;
  if (!d.true_labels) {
    for (const char* key : {"nr_overall", "nr_head", "nr_med", "nr_tail", "accuracy", "macro_f1", "acc_head",
                            "acc_med", "acc_tail", "per_class_nr"}) {
      out[key] = nullptr;
    }
    out["message"] =
        "dataset has no true labels: noise rates are unavailable and accuracy / macro F1 against observed "
        "labels is refused";
    return out;
  }
  const auto& truth = *d.true_labels;
  const auto split = group_split(ClassCounts::from_labels(truth, d.num_classes));
  const auto nr = noise_rate_by_group(rectified, truth, split);
  const auto ga = group_accuracy(predictions, truth, split);
  out["nr_overall"] = nr.overall;
  out["nr_head"] = nr.head;
  out["nr_med"] = nr.med;
  out["nr_tail"] = nr.tail;
  out["accuracy"] = accuracy(predictions, truth);
  out["macro_f1"] = macro_f1(predictions, truth, d.num_classes);
  out["acc_head"] = ga[0];
  out["acc_med"] = ga[1];
  out["acc_tail"] = ga[2];
  out["per_class_nr"] = per_class_noise_rate(rectified, truth, d.num_classes);
  return out;
}

}  // namespace care
