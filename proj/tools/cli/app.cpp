#include "cli/app.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cli/commands.hpp"
#include "rlab/io.hpp"
#include "rlab/quantum_core.hpp"

namespace rlab::cli {

namespace {

/// Converts a --config JSON object into "--key value" tokens. Arrays become comma lists.
std::vector<std::string> config_tokens(const json& cfg) {
  if (!cfg.is_object()) throw UsageError("--config: file must contain a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + value[i].dump();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "1" : "0";
    } else {
      text = value.dump();
    }
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    tokens.push_back("--" + flag);
    tokens.push_back(text);
  }
  return tokens;
}

/// Splices tokens from --config FILE in front of the explicit flags so that flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty()) return args;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    }
    if (consumed == 0) continue;
    json cfg;
    try {
      cfg = io::read_json_file(path);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    const auto tokens = config_tokens(cfg);
    args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    break;
  }
  return args;
}

void add_minimizer_flags(CLI::App* sub, MinimizeFlags& f) {
  sub->add_option("--starts", f.starts, "Random starts per minimization")->capture_default_str();
  sub->add_option("--max-iters", f.max_iters, "Iteration cap per start")->capture_default_str();
  sub->add_option("--grad-tol", f.grad_tol, "Riemannian gradient tolerance")->capture_default_str();
  sub->add_option("--value-tol", f.value_tol, "Relative decrease tolerance")->capture_default_str();
  sub->add_option("--fd-step", f.fd_step, "Finite-difference step")->capture_default_str();
  sub->add_option("--special-starts", f.special_starts, "1 to add computational basis starts")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"rlab: random unitary channels and minimum output Renyi entropy experiments", "rlab"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string out_dir = "results";
  std::uint64_t seed = 0;
  std::string config_unused;
  std::function<CommandOutput()> action;
  std::string command;

  auto common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--out", out_dir, "Results directory")->capture_default_str();
    sub->add_option("--config", config_unused, "JSON file of flag values; explicit flags override it");
    if (seeded) sub->add_option("--seed", seed, "Master seed")->capture_default_str();
  };

  auto* critical = app.add_subcommand("critical", "Critical constants y0, h0, p0");
  common(critical, false);
  critical->callback([&] { command = "critical", action = [] { return cmd_critical(); }; });

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "Additivity upper bound and entropy-deficit threshold");
  common(bound_cmd, false);
  bound_cmd->add_option("--kraus", bound.kraus, "Number of unitaries D")->required();
  bound_cmd->add_option("--p", bound.p, "Renyi order in (0, 1)")->required();
  bound_cmd->callback([&] { command = "bound", action = [&] { return cmd_bound(bound); }; });

  ViolationArgs viol;
  auto* viol_cmd = app.add_subcommand("violation-search", "Compare 2 H_min(E) with H_min(E x conj E) on sampled channels");
  common(viol_cmd, true);
  viol_cmd->add_option("--kraus", viol.kraus, "Number of unitaries D")->capture_default_str();
  viol_cmd->add_option("--dim", viol.dim, "Dimension N (<= 64)")->capture_default_str();
  viol_cmd->add_option("--p", viol.p, "Renyi order in (0, 1)")->capture_default_str();
  viol_cmd->add_option("--channels", viol.channels, "Number of sampled channels")->capture_default_str();
  add_minimizer_flags(viol_cmd, viol.opt);
  viol_cmd->callback([&] { command = "violation-search", viol.seed = seed, action = [&] { return cmd_violation_search(viol); }; });

  ConcentrationArgs conc;
  auto* conc_cmd = app.add_subcommand("concentration", "Eigenvalue concentration of complementary outputs");
  common(conc_cmd, true);
  conc_cmd->add_option("--kraus", conc.kraus, "Number of unitaries D")->capture_default_str();
  conc_cmd->add_option("--dims", conc.dims, "Comma-separated dimensions N")->capture_default_str();
  conc_cmd->add_option("--trials", conc.trials, "Trials per N")->capture_default_str();
  conc_cmd->add_option("--lambdas", conc.lambdas, "Comma-separated lambda grid")->capture_default_str();
  conc_cmd->callback([&] { command = "concentration", conc.seed = seed, action = [&] { return cmd_concentration(conc); }; });

  QLambdaArgs ql;
  auto* ql_cmd = app.add_subcommand("q-lambda", "Fraction of channels with P_{E,lambda} < 1/2");
  common(ql_cmd, true);
  ql_cmd->add_option("--kraus", ql.kraus, "Number of unitaries D")->capture_default_str();
  ql_cmd->add_option("--dim", ql.dim, "Dimension N")->capture_default_str();
  ql_cmd->add_option("--lambdas", ql.lambdas, "Comma-separated lambda grid")->capture_default_str();
  ql_cmd->add_option("--channels", ql.channels, "Number of sampled channels")->capture_default_str();
  ql_cmd->add_option("--trials", ql.trials, "Random inputs per channel")->capture_default_str();
  ql_cmd->callback([&] { command = "q-lambda", ql.seed = seed, action = [&] { return cmd_q_lambda(ql); }; });

  NearEventArgs near;
  auto* near_cmd = app.add_subcommand("near-event", "Interpolation fits of random outputs against the minimizer's output");
  common(near_cmd, true);
  near_cmd->add_option("--kraus", near.kraus, "Number of unitaries D")->capture_default_str();
  near_cmd->add_option("--dim", near.dim, "Dimension N")->capture_default_str();
  near_cmd->add_option("--channel", near.channel, "Channel JSON file (overrides --kraus/--dim)");
  near_cmd->add_option("--p", near.p, "Renyi order used to find psi0")->capture_default_str();
  near_cmd->add_option("--y0", near.y0, "Threshold on the fitted y")->capture_default_str();
  near_cmd->add_option("--trials", near.trials, "Random inputs")->capture_default_str();
  add_minimizer_flags(near_cmd, near.opt);
  near_cmd->callback([&] { command = "near-event", near.seed = seed, action = [&] { return cmd_near_event(near); }; });

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Closed-form bounds over a grid of orders p");
  common(scan_cmd, false);
  scan_cmd->add_option("--kraus", scan.kraus, "Number of unitaries D")->capture_default_str();
  scan_cmd->add_option("--p-grid", scan.p_grid, "Comma-separated orders in (0, 1)")->capture_default_str();
  scan_cmd->callback([&] { command = "scan", action = [&] { return cmd_scan(scan); }; });

  SampleChannelArgs sample;
  auto* sample_cmd = app.add_subcommand("sample-channel", "Sample a random unitary channel");
  common(sample_cmd, true);
  sample_cmd->add_option("--kraus", sample.kraus, "Number of unitaries D")->capture_default_str();
  sample_cmd->add_option("--dim", sample.dim, "Dimension N")->capture_default_str();
  sample_cmd->add_option("--save", sample.save, "Also write the channel JSON here");
  sample_cmd->callback([&] { command = "sample-channel", sample.seed = seed, action = [&] { return cmd_sample_channel(sample); }; });

  MinimizeArgs mini;
  auto* mini_cmd = app.add_subcommand("minimize", "Estimate the minimum output Renyi entropy of a channel");
  common(mini_cmd, true);
  mini_cmd->add_option("--channel", mini.channel, "Channel JSON file");
  mini_cmd->add_option("--kraus", mini.kraus, "Number of unitaries D when sampling")->capture_default_str();
  mini_cmd->add_option("--dim", mini.dim, "Dimension N when sampling")->capture_default_str();
  mini_cmd->add_option("--p", mini.p, "Renyi order (p > 0)")->capture_default_str();
  add_minimizer_flags(mini_cmd, mini.opt);
  mini_cmd->callback([&] { command = "minimize", mini.seed = seed, action = [&] { return cmd_minimize(mini); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const CommandOutput result = action();
    const std::uint64_t recorded_seed = (command == "critical" || command == "bound" || command == "scan") ? 0 : seed;
    const RunRecord rec = persist(out_dir, command, recorded_seed, result);
    for (const auto& line : result.console) out << line << "\n";
    out << "run " << rec.run_id << " -> " << (std::filesystem::path(out_dir) / rec.run_id).string() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace rlab::cli
