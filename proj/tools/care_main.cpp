// care: synthesize datasets, rectify noisy labels, verify the consensus
// theory and evaluate finished runs.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "care/commands.hpp"
#include "care/io.hpp"

namespace {

using care::RunConfig;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> imbalance_factor, noise_rate, spread;
  std::optional<std::string> noise;
  std::optional<std::size_t> classes, feature_dim, epochs, batch_size, k_global, trials;
  std::optional<std::uint64_t> max_per_class;
  std::optional<std::string> k_form, loss, te_file, ie_file;
  std::optional<double> be_weight, scale, lr, threshold;
  std::vector<std::size_t> k_pair;
  bool no_ablation = false;

  void apply(RunConfig& c) const {
    if (seed) c.seed = *seed;
    if (imbalance_factor) c.imbalance_factor = *imbalance_factor;
    if (noise_rate) c.noise_rate = *noise_rate;
    if (spread) c.spread = *spread;
    if (noise) c.noise = care::noise_kind_from_string(*noise);
    if (classes) c.num_classes = *classes;
    if (feature_dim) c.feature_dim = *feature_dim;
    if (max_per_class) c.max_per_class = *max_per_class;
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (k_form) c.k_form = care::k_form_from_string(*k_form);
    if (k_global) c.k_global = *k_global;
    if (loss) c.loss = care::loss_kind_from_string(*loss);
    if (te_file) c.te_file = *te_file;
    if (ie_file) c.ie_file = *ie_file;
    if (be_weight) c.be_weight = *be_weight;
    if (scale) c.scale = *scale;
    if (lr) c.learning_rate = *lr;
    if (trials) c.verify.trials = *trials;
    if (threshold) c.verify.theorem_threshold = *threshold;
    if (k_pair.size() == 2) {
      c.verify.k_tail = k_pair[0];
      c.verify.k_global = k_pair[1];
    }
    if (no_ablation) c.verify.run_ablation = false;
  }
};

void add_shared(CLI::App* cmd, Overrides& o, std::string& config_path, std::string& out) {
  cmd->add_option("--seed", o.seed, "Global random seed");
  cmd->add_option("--config", config_path, "JSON config file; flags override it");
  cmd->add_option("--out", out, "Output path");
}

void add_synth_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--if", o.imbalance_factor, "Imbalance factor n_1/n_C");
  cmd->add_option("--nr", o.noise_rate, "Noise rate in [0, 1)");
  cmd->add_option("--noise", o.noise, "symmetric | pairflip | joint");
  cmd->add_option("--classes", o.classes, "Number of classes");
  cmd->add_option("--max-per-class", o.max_per_class, "Samples in the largest class");
  cmd->add_option("--dim", o.feature_dim, "Feature dimension");
  cmd->add_option("--spread", o.spread, "Per-coordinate cluster spread");
}

RunConfig effective(const std::string& config_path, const Overrides& o) {
  RunConfig c = config_path.empty() ? RunConfig{} : care::load_config(config_path);
  o.apply(c);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-adaptive expert consensus for long-tailed noisy labels"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path, out, data, run;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic long-tailed noisy dataset");
  add_shared(synth, o, config_path, out);
  add_synth_flags(synth, o);

  auto* rectify = app.add_subcommand("rectify", "Run consensus rectification with logit-adjusted training");
  add_shared(rectify, o, config_path, out);
  rectify->add_option("--data", data, "Dataset directory")->required();
  rectify->add_option("--k-form", o.k_form, "quarter | step | exp | log | linear | global");
  rectify->add_option("--k-global", o.k_global, "K for the global form");
  rectify->add_option("--loss", o.loss, "la | ce");
  rectify->add_option("--be-weight", o.be_weight, "Observed-label expert weight in (0, 1]");
  rectify->add_option("--scale", o.scale, "Cosine logit scale");
  rectify->add_option("--epochs", o.epochs, "Training epochs");
  rectify->add_option("--batch-size", o.batch_size, "Minibatch size");
  rectify->add_option("--lr", o.lr, "Learning rate");
  rectify->add_option("--te-file", o.te_file, "CARECONF file replacing the text expert");
  rectify->add_option("--ie-file", o.ie_file, "CARECONF file replacing the image expert");

  auto* verify = app.add_subcommand("verify", "Monte-Carlo and oracle verification report");
  add_shared(verify, o, config_path, out);
  add_synth_flags(verify, o);
  verify->add_option("--trials", o.trials, "Monte-Carlo trials");
  verify->add_option("--k-pair", o.k_pair, "Tail K and global K for the precision check")->expected(2);
  verify->add_option("--threshold", o.threshold, "Override the theorem ratio threshold");
  verify->add_option("--epochs", o.epochs, "Epochs for the ablation runs");
  verify->add_flag("--no-ablation", o.no_ablation, "Skip the expert-combination ablation");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics for a finished rectify run");
  evaluate->add_option("--run", run, "Run directory")->required();
  evaluate->add_option("--data", data, "Dataset directory")->required();
  evaluate->add_option("--out", out, "Write the metrics JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? care::kExitOk : care::kExitValidation;
  }

  try {
    if (synth->parsed()) {
      if (out.empty()) throw care::ValidationError("--out is required");
      const auto d = care::cmd_synth(effective(config_path, o), out);
      std::cout << "wrote " << d.num_samples() << " samples, " << d.num_classes << " classes to " << out << "\n";
    } else if (rectify->parsed()) {
      if (out.empty()) throw care::ValidationError("--out is required");
      const auto report = care::cmd_rectify(effective(config_path, o), data, out);
      const auto& last = report.epochs.back();
      std::cout << "epochs: " << report.epochs.size();
      if (last.nr_overall) std::cout << "  final noise rate: " << *last.nr_overall;
      std::cout << "\n";
    } else if (verify->parsed()) {
      const auto outcome = care::cmd_verify(effective(config_path, o));
      for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
      const auto text = outcome.report.dump(2) + "\n";
      if (out.empty()) std::cout << text;
      else care::write_text(out, text);
      return outcome.all_passed ? care::kExitOk : care::kExitVerification;
    } else if (evaluate->parsed()) {
      const auto metrics = care::cmd_evaluate(run, data);
      if (metrics.contains("message")) std::cerr << metrics["message"].get<std::string>() << "\n";
      const auto text = metrics.dump(2) + "\n";
      if (out.empty()) std::cout << text;
      else care::write_text(out, text);
    }
  } catch (const care::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return care::kExitValidation;
  } catch (const care::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return care::kExitIo;
  }
  return care::kExitOk;
}
