#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rlab/bounds.hpp"
#include "rlab/channels.hpp"
#include "rlab/entropy_min.hpp"
#include "rlab/io.hpp"
#include "rlab/montecarlo.hpp"

namespace rlab::cli {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void check_kraus(int d) { require(d >= 1, "--kraus must be >= 1"); }
void check_dim(int n) { require(n >= 1, "--dim must be >= 1"); }
void check_open_unit_p(double p) { require(p > 0.0 && p < 1.0, "--p must lie in (0, 1)"); }

MinimizationConfig to_config(const MinimizeFlags& f) {
  require(f.starts >= 1, "--starts must be >= 1");
  require(f.max_iters >= 1, "--max-iters must be >= 1");
  require(f.grad_tol > 0.0, "--grad-tol must be positive");
  require(f.value_tol > 0.0, "--value-tol must be positive");
  require(f.fd_step > 0.0, "--fd-step must be positive");
  MinimizationConfig cfg;
  cfg.starts = f.starts;
  cfg.max_iters = f.max_iters;
  cfg.grad_tol = f.grad_tol;
  cfg.value_tol = f.value_tol;
  cfg.fd_step = f.fd_step;
  cfg.include_special_starts = f.special_starts != 0;
  return cfg;
}

json to_json(const MinimizeFlags& f) {
  return json{{"starts", f.starts},     {"max_iters", f.max_iters}, {"grad_tol", f.grad_tol},
              {"value_tol", f.value_tol}, {"fd_step", f.fd_step},     {"special_starts", f.special_starts}};
}

std::string num(double x) { return fmt::format("{}", x); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open channel file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      require(used == cell.size(), flag + ": cannot parse '" + cell + "'");
    } catch (const std::logic_error&) {
      throw UsageError(flag + ": cannot parse '" + cell + "'");
    }
  }
  require(!out.empty(), flag + " must list at least one value");
  return out;
}

std::vector<long> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<long> out;
  for (double v : parse_real_list(text, flag)) {
    require(v == std::floor(v), flag + ": values must be integers");
    out.push_back(static_cast<long>(v));
  }
  return out;
}

CommandOutput cmd_critical() {
  const CriticalConstants c = find_critical();
  CommandOutput o;
  o.metrics = {{"y0", c.y0}, {"h0", c.h0}, {"p0", c.p0}, {"window_upper_start", 1.0 - c.p0}};
  o.rows.push_back(Row{0, {}}.add("y0", c.y0).add("h0", c.h0).add("p0", c.p0));
  o.console.push_back(fmt::format("y0 = {:.12f}", c.y0));
  o.console.push_back(fmt::format("h0 = {:.12f}", c.h0));
  o.console.push_back(fmt::format("p0 = {:.12f}", c.p0));
  o.console.push_back(fmt::format("violation window: (0, {:.6f}) U ({:.6f}, 1)", c.p0, 1.0 - c.p0));
  return o;
}

CommandOutput cmd_bound(const BoundArgs& a) {
  check_kraus(a.kraus);
  check_open_unit_p(a.p);
  CommandOutput o;
  o.parameters = {{"kraus", a.kraus}, {"p", a.p}};
  const double bound = lemma1_bound(a.kraus, a.p);
  Row row{0, {}};
  row.add("lemma1_bound", bound).add("two_ln_D", 2.0 * std::log(static_cast<double>(a.kraus)));
  o.metrics["lemma1_bound"] = bound;
  o.console.push_back(fmt::format("lemma1_bound(D={}, p={}) = {:.12f}", a.kraus, num(a.p), bound));
  if (a.kraus >= 2) {
    const double ds = deltaS_threshold(a.kraus, a.p);
    row.add("deltaS", ds)
        .add("delta", delta_from_deltaS(a.kraus, a.p, ds))
        .add("deficit_rate", deficit_rate(a.p, a.kraus, ds));
    o.metrics["deltaS"] = ds;
    o.console.push_back(fmt::format("deltaS = {:.12f}", ds));
  }
  o.metrics["in_violation_window"] = in_violation_window(a.p, find_critical()) ? 1.0 : 0.0;
  o.rows.push_back(std::move(row));
  return o;
}

CommandOutput cmd_violation_search(const ViolationArgs& a) {
  check_kraus(a.kraus);
  check_dim(a.dim);
  require(a.dim <= kMaxProductDim, "--dim must be <= 64 for the product-channel stage");
  check_open_unit_p(a.p);
  require(a.channels >= 1, "--channels must be >= 1");
  const MinimizationConfig cfg = to_config(a.opt);
  const RenyiOrder order(a.p);

  CommandOutput o;
  o.parameters = {{"kraus", a.kraus}, {"dim", a.dim}, {"p", a.p}, {"channels", a.channels}, {"minimizer", to_json(a.opt)}};
  const RngStream root(a.seed, 0);
  const double bound = lemma1_bound(a.kraus, a.p);
  std::vector<double> gaps;
  int positive = 0;
  for (int c = 0; c < a.channels; ++c) {
    RngStream s = root.derive(static_cast<std::uint64_t>(c));
    const RandomUnitaryChannel ch = sample_channel(a.kraus, a.dim, s);
    const EntropyEstimate single = minimize_output_entropy(ch, order, cfg, s.derive(0));
    const double h_phi = product_output_entropy(ch, maximally_entangled(a.dim), order);
    const EntropyEstimate prod = minimize_product_entropy(ch, order, cfg, s.derive(1), single.witness);
    const double gap = 2.0 * single.value - prod.value;
    gaps.push_back(gap);
    if (gap > 0.0) ++positive;
    o.rows.push_back(Row{c, {}}
                         .add("H1", single.value)
                         .add("H_phi", h_phi)
                         .add("H2", prod.value)
                         .add("gap", gap)
                         .add("mixture_bound", mixture_bound(ch.weights(), a.p))
                         .add("lemma1_bound", bound)
                         .add("H1_converged", single.converged ? 1.0 : 0.0)
                         .add("H2_converged", prod.converged ? 1.0 : 0.0));
    o.console.push_back(fmt::format("channel {:3d}: H1 = {:.10f}  H_phi = {:.10f}  H2 = {:.10f}  gap = {:+.3e}", c,
                                    single.value, h_phi, prod.value, gap));
  }
  o.metrics = {{"min_gap", *std::min_element(gaps.begin(), gaps.end())},
               {"median_gap", median(gaps)},
               {"max_gap", *std::max_element(gaps.begin(), gaps.end())},
               {"positive_gaps", static_cast<double>(positive)},
               {"lemma1_bound", bound}};
  o.console.push_back(fmt::format("summary: min gap {:+.3e}, median gap {:+.3e}, {} of {} positive", o.metrics["min_gap"],
                                  o.metrics["median_gap"], positive, a.channels));
  o.console.push_back("a positive gap is a candidate violation: every H is an upper bound from local search");
  return o;
}

CommandOutput cmd_concentration(const ConcentrationArgs& a) {
  check_kraus(a.kraus);
  require(a.trials >= 1, "--trials must be >= 1");
  const auto dims_l = parse_int_list(a.dims, "--dims");
  const auto lambdas = parse_real_list(a.lambdas, "--lambdas");
  std::vector<Index> dims;
  for (long n : dims_l) {
    require(n > a.kraus, "--dims entries must exceed --kraus");
    dims.push_back(n);
  }
  for (double l : lambdas) require(l >= 0.0, "--lambdas must be non-negative");

  CommandOutput o;
  o.parameters = {{"kraus", a.kraus}, {"dims", dims_l}, {"trials", a.trials}, {"lambdas", lambdas}};
  const auto reports = concentration_experiment(a.kraus, dims, a.trials, RngStream(a.seed, 0));
  json all = json::array();
  std::int64_t trial = 0;
  for (const auto& r : reports) {
    const double scale = concentration_scale(r.N);
    for (double d : r.deviations)
      o.rows.push_back(Row{trial++, {}}.add("N", static_cast<double>(r.N)).add("deviation", d).add("scaled_deviation", d / scale));
    o.metrics[fmt::format("median_deviation_N{}", r.N)] = r.median_deviation;
    o.metrics[fmt::format("scaled_median_N{}", r.N)] = r.scaled_median;
    std::string line = fmt::format("N = {:5d}: median deviation {:.6e}, scaled {:.4f}", r.N, r.median_deviation, r.scaled_median);
    for (double l : lambdas) {
      const double f = fraction_lambda_mixed(r.deviations, l, r.N);
      o.metrics[fmt::format("fraction_lambda_{}_N{}", num(l), r.N)] = f;
      line += fmt::format(", P(lambda={}) {:.3f}", num(l), f);
    }
    o.console.push_back(line);
    all.push_back(io::to_json(r));
  }
  o.artifacts.emplace_back("reports.json", std::move(all));
  return o;
}

CommandOutput cmd_q_lambda(const QLambdaArgs& a) {
  check_kraus(a.kraus);
  check_dim(a.dim);
  require(a.channels >= 1, "--channels must be >= 1");
  require(a.trials >= 1, "--trials must be >= 1");
  const auto lambdas = parse_real_list(a.lambdas, "--lambdas");
  for (double l : lambdas) require(l >= 0.0, "--lambdas must be non-negative");

  CommandOutput o;
  o.parameters = {{"kraus", a.kraus}, {"dim", a.dim}, {"lambdas", lambdas}, {"channels", a.channels}, {"trials", a.trials}};
  const RngStream root(a.seed, 0);
  std::vector<std::vector<double>> p_values(lambdas.size());
  // Same streams as estimate_q_lambda, so every lambda sees common random numbers.
  for (int c = 0; c < a.channels; ++c) {
    RngStream s = root.derive(static_cast<std::uint64_t>(c));
    const RandomUnitaryChannel ch = sample_channel(a.kraus, a.dim, s);
    const auto dev = complementary_deviations(ch, a.trials, s);
    Row row{c, {}};
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double pl = fraction_lambda_mixed(dev, lambdas[k], a.dim);
      p_values[k].push_back(pl);
      row.add(fmt::format("p_lambda_{}", num(lambdas[k])), pl);
    }
    o.rows.push_back(std::move(row));
  }
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const auto bad = std::count_if(p_values[k].begin(), p_values[k].end(), [](double v) { return v < 0.5; });
    const double q = static_cast<double>(bad) / a.channels;
    const double se = std::sqrt(q * (1.0 - q) / a.channels);
    o.metrics[fmt::format("q_lambda_{}", num(lambdas[k]))] = q;
    o.metrics[fmt::format("q_lambda_{}_se", num(lambdas[k]))] = se;
    o.console.push_back(fmt::format("lambda = {:>5}: Q = {:.4f} +- {:.4f}", num(lambdas[k]), q, se));
  }
  return o;
}

CommandOutput cmd_near_event(const NearEventArgs& a) {
  require(a.p > 0.0, "--p must be positive");
  require(a.y0 >= 0.0 && a.y0 <= 1.0, "--y0 must lie in [0, 1]");
  require(a.trials >= 1, "--trials must be >= 1");
  const MinimizationConfig cfg = to_config(a.opt);
  const RngStream root(a.seed, 0);

  CommandOutput o;
  std::optional<RandomUnitaryChannel> ch;
  if (!a.channel.empty()) {
    const std::string text = read_file(a.channel);
    ch = io::channel_from_json(json::parse(text));
    o.parameters["channel_sha256"] = sha256_hex(text);
  } else {
    check_kraus(a.kraus);
    check_dim(a.dim);
    RngStream s = root.derive(0);
    ch = sample_channel(a.kraus, a.dim, s);
    o.parameters["kraus"] = a.kraus;
    o.parameters["dim"] = a.dim;
  }
  o.parameters["p"] = a.p;
  o.parameters["y0"] = a.y0;
  o.parameters["trials"] = a.trials;
  o.parameters["minimizer"] = to_json(a.opt);

  const EntropyEstimate psi0 = minimize_output_entropy(*ch, RenyiOrder(a.p), cfg, root.derive(1));
  const NearEventReport rep = near_event_experiment(*ch, psi0.witness, a.y0, a.trials, root.derive(2));
  for (int t = 0; t < rep.trials; ++t) {
    const auto k = static_cast<std::size_t>(t);
    o.rows.push_back(Row{t, {}}.add("y", rep.fitted_y[k]).add("residual", rep.residuals[k]).add("least_squares_y", rep.least_squares_y[k]));
  }
  o.metrics = {{"fraction_above_y0", rep.fraction_above_y0},
               {"median_residual", rep.median_residual},
               {"psi0_entropy", psi0.value},
               {"scaled_median_residual", rep.median_residual / concentration_scale(ch->dim())}};
  o.artifacts.emplace_back("report.json", io::to_json(rep));
  o.artifacts.emplace_back("psi0.json", io::to_json(psi0.witness));
  o.console.push_back(fmt::format("psi0 entropy {:.10f}; fraction with y >= {} : {:.4f}; median residual {:.4e}", psi0.value,
                                  num(a.y0), rep.fraction_above_y0, rep.median_residual));
  return o;
}

CommandOutput cmd_scan(const ScanArgs& a) {
  check_kraus(a.kraus);
  const auto grid = parse_real_list(a.p_grid, "--p-grid");
  for (double p : grid) require(p > 0.0 && p < 1.0, "--p-grid values must lie in (0, 1)");
  const CriticalConstants c = find_critical();
  CommandOutput o;
  o.parameters = {{"kraus", a.kraus}, {"p_grid", grid}};
  std::int64_t t = 0;
  for (double p : grid) {
    Row row{t++, {}};
    row.add("p", p).add("lemma1_bound", lemma1_bound(a.kraus, p)).add("in_violation_window", in_violation_window(p, c) ? 1.0 : 0.0);
    if (a.kraus >= 2) {
      const double ds = deltaS_threshold(a.kraus, p);
      row.add("deltaS", ds).add("delta", delta_from_deltaS(a.kraus, p, ds)).add("deficit_rate", deficit_rate(p, a.kraus, ds));
    }
    o.rows.push_back(std::move(row));
  }
  o.metrics = {{"p0", c.p0}, {"points", static_cast<double>(grid.size())}};
  o.console.push_back(fmt::format("scanned {} orders at D = {}; p0 = {:.6f}", grid.size(), a.kraus, c.p0));
  return o;
}

CommandOutput cmd_sample_channel(const SampleChannelArgs& a) {
  check_kraus(a.kraus);
  check_dim(a.dim);
  RngStream s(a.seed, 0);
  const RandomUnitaryChannel ch = sample_channel(a.kraus, a.dim, s);
  CommandOutput o;
  o.parameters = {{"kraus", a.kraus}, {"dim", a.dim}};
  double worst = 0.0;
  for (Index i = 0; i < ch.kraus_count(); ++i) {
    const CMatrix& u = ch.unitary(i);
    const double err = (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    o.rows.push_back(Row{i, {}}.add("weight", ch.weight(i)).add("unitarity_error", err));
  }
  const auto w = ch.weights().values();
  o.metrics = {{"D", static_cast<double>(a.kraus)},
               {"N", static_cast<double>(a.dim)},
               {"weight_min", *std::min_element(w.begin(), w.end())},
               {"weight_max", *std::max_element(w.begin(), w.end())},
               {"max_unitarity_error", worst}};
  const json j = io::to_json(ch);
  o.artifacts.emplace_back("channel.json", j);
  if (!a.save.empty()) {
    io::write_json_file(a.save, j);
    o.console.push_back("channel written to " + a.save);
  }
  o.console.push_back(fmt::format("sampled channel D = {}, N = {}; max unitarity error {:.2e}", a.kraus, a.dim, worst));
  return o;
}

CommandOutput cmd_minimize(const MinimizeArgs& a) {
  require(a.p > 0.0, "--p must be positive");
  const MinimizationConfig cfg = to_config(a.opt);
  CommandOutput o;
  std::optional<RandomUnitaryChannel> ch;
  if (!a.channel.empty()) {
    const std::string text = read_file(a.channel);
    ch = io::channel_from_json(json::parse(text));
    o.parameters["channel_sha256"] = sha256_hex(text);
  } else {
    check_kraus(a.kraus);
    check_dim(a.dim);
    RngStream s(a.seed, 0);
    ch = sample_channel(a.kraus, a.dim, s);
    o.parameters["kraus"] = a.kraus;
    o.parameters["dim"] = a.dim;
  }
  o.parameters["p"] = a.p;
  o.parameters["minimizer"] = to_json(a.opt);

  const EntropyEstimate est = minimize_output_entropy(*ch, RenyiOrder(a.p), cfg, RngStream(a.seed, 1));
  for (std::size_t s = 0; s < est.all_start_values.size(); ++s)
    o.rows.push_back(Row{static_cast<std::int64_t>(s), {}}.add("value", est.all_start_values[s]));
  o.metrics = {{"value", est.value},
               {"start_index", static_cast<double>(est.start_index)},
               {"iterations", static_cast<double>(est.iterations)},
               {"converged", est.converged ? 1.0 : 0.0}};
  o.artifacts.emplace_back("witness.json", io::to_json(est.witness));
  o.console.push_back(fmt::format("min output entropy estimate (upper bound) H_{} = {:.12f} from start {}{}", num(a.p), est.value,
                                  est.start_index, est.converged ? "" : " (not converged)"));
  return o;
}

}  // namespace rlab::cli
