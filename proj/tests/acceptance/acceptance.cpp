// Acceptance suite: one PASS/FAIL line per criterion, each with its measured runtime.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "cli/app.hpp"
#include "cli/commands.hpp"
#include "rlab/bounds.hpp"
#include "rlab/channels.hpp"
#include "rlab/entropy_min.hpp"
#include "rlab/montecarlo.hpp"
#include "support/oracles.hpp"

using namespace rlab;
namespace rt = rlab::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0: no limit of its own
  std::function<Outcome()> run;
};

/// Collects the first few failures; pass stays true while every check holds.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_.push_back(what);
  }
  Outcome result(std::string summary) const {
    Outcome o;
    o.pass = failures_ == 0;
    o.detail = std::move(summary);
    if (failures_ > 0) {
      o.detail += fmt::format("; {} failed check(s): ", failures_);
      for (std::size_t i = 0; i < messages_.size(); ++i) o.detail += (i ? " | " : "") + messages_[i];
    }
    return o;
  }

 private:
  int failures_ = 0;
  std::vector<std::string> messages_;
};

// Frozen fine-grid oracle (step 1e-7), from tests/oracles/frozen_values.py.
constexpr double kGridY0 = 0.7153319;
constexpr double kGridH0 = 0.8145287551781443;
constexpr double kGridP0 = 0.2846681370408366;

Outcome critical_constants() {
  Checker c;
  const cli::CommandOutput out = cli::cmd_critical();
  const double y0 = out.metrics.at("y0"), h0 = out.metrics.at("h0"), p0 = out.metrics.at("p0");
  c.expect(std::abs(p0 - 0.2855) <= 2e-3, fmt::format("p0 {} vs 0.2855", p0));
  c.expect(std::abs(h0 - 0.8145) <= 1e-3, fmt::format("h0 {} vs 0.8145", h0));
  c.expect(std::abs(y0 - 0.7106) <= 6e-3, fmt::format("y0 {} vs 0.7106", y0));
  c.expect(std::abs(y0 - kGridY0) <= 1e-6, fmt::format("y0 {} vs oracle {}", y0, kGridY0));
  c.expect(std::abs(h0 - kGridH0) <= 1e-6, fmt::format("h0 {} vs oracle {}", h0, kGridH0));
  c.expect(std::abs(p0 - kGridP0) <= 1e-6, fmt::format("p0 {} vs oracle {}", p0, kGridP0));
  return c.result(fmt::format("y0={:.9f} h0={:.12f} p0={:.12f}", y0, h0, p0));
}

Outcome spectral_equivalence() {
  Checker c;
  RngStream rng(101, 0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index D = 2 + static_cast<Index>(rng.uniform() * 4);
    const Index N = 4 + static_cast<Index>(rng.uniform() * 13);
    const RandomUnitaryChannel ch = sample_channel(D, N, rng);
    const PureState psi = random_pure_state(N, rng);
    const auto a = rt::nonzero_sorted(eigenvalues(apply(ch, DensityMatrix::projector(psi))).values());
    const auto b = rt::nonzero_sorted(eigenvalues(conjugate_apply(ch, psi)).values());
    c.expect(a.size() == b.size(), fmt::format("instance {}: rank {} vs {}", t, a.size(), b.size()));
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  c.expect(worst <= 1e-8, fmt::format("max deviation {:.3e}", worst));
  return c.result(fmt::format("100 instances, max |spectrum difference| = {:.3e}", worst));
}

Outcome bound_chain() {
  Checker c;
  RngStream rng(102, 0);
  double worst_first = -1e300, worst_second = -1e300;
  for (int t = 0; t < 100; ++t) {
    const Index D = 2 + static_cast<Index>(rng.uniform() * 5);
    const Index N = 4 + static_cast<Index>(rng.uniform() * 9);
    const RandomUnitaryChannel ch = sample_channel(D, N, rng);
    const PureState phi = maximally_entangled(N);
    for (double p : {0.1, 0.2855, 0.5, 0.9}) {
      const double h = product_output_entropy(ch, phi, RenyiOrder(p));
      const double mb = mixture_bound(ch.weights(), p);
      const double lb = lemma1_bound(static_cast<int>(D), p);
      worst_first = std::max(worst_first, h - mb);
      worst_second = std::max(worst_second, mb - lb);
      c.expect(h <= mb + 1e-9, fmt::format("channel {} p={}: H_phi {} > mixture {}", t, p, h, mb));
      c.expect(mb <= lb + 1e-9, fmt::format("channel {} p={}: mixture {} > lemma {}", t, p, mb, lb));
    }
  }
  double worst_uniform = 0.0;
  for (int D = 1; D <= 64; ++D)
    for (int k = 1; k <= 19; ++k) {
      const double p = 0.05 * k;
      worst_uniform = std::max(worst_uniform, std::abs(mixture_bound(WeightVector::uniform(D), p) - lemma1_bound(D, p)));
    }
  c.expect(worst_uniform <= 1e-12, fmt::format("uniform weights differ by {:.3e}", worst_uniform));
  return c.result(fmt::format("max(H_phi - mixture) = {:.3e}, max(mixture - lemma) = {:.3e}, uniform |diff| = {:.1e}",
                              worst_first, worst_second, worst_uniform));
}

Outcome optimizer_oracle() {
  Checker c;
  RngStream rng(103, 0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Index D = 2 + t % 2;
    const RandomUnitaryChannel ch = sample_channel(D, 2, rng);
    for (double p : {0.3, 0.5}) {
      const RenyiOrder order(p);
      const double est = minimize_output_entropy(ch, order, MinimizationConfig{}, RngStream(103, 1 + t)).value;
      const double oracle = brute_force_min(ch, order, 400);
      worst = std::max(worst, std::abs(est - oracle));
      c.expect(std::abs(est - oracle) <= 1e-5, fmt::format("channel {} p={}: {} vs oracle {}", t, p, est, oracle));
    }
  }
  return c.result(fmt::format("20 qubit channels x 2 orders, max |estimate - grid oracle| = {:.3e}", worst));
}

Outcome entropy_identities() {
  Checker c;
  double worst_mixed = 0.0;
  for (std::size_t d = 1; d <= 64; ++d) {
    const Spectrum s(std::vector<double>(d, 1.0 / static_cast<double>(d)));
    for (double p : {0.25, 0.5, 0.75}) worst_mixed = std::max(worst_mixed, std::abs(renyi_entropy(s, RenyiOrder(p)) - std::log(double(d))));
  }
  c.expect(worst_mixed <= 1e-12, fmt::format("maximally mixed deviates by {:.3e}", worst_mixed));
  RngStream rng(105, 0);
  double worst_cont = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 16);
    const Spectrum s(rt::random_probability_vector(rng, d));
    const double vn = von_neumann_entropy(s);
    for (double p : {1.0 - 1e-4, 1.0 + 1e-4}) worst_cont = std::max(worst_cont, std::abs(renyi_entropy(s, RenyiOrder(p)) - vn));
  }
  c.expect(worst_cont <= 5e-4, fmt::format("continuity gap {:.3e}", worst_cont));
  return c.result(fmt::format("|H_p - ln d| <= {:.1e}, |H_(1+-1e-4) - H_VN| <= {:.3e}", worst_mixed, worst_cont));
}

Outcome weight_law() {
  Checker c;
  constexpr int kSamples = 100000, D = 4, N = 8;
  RngStream rng(106, 0);
  std::vector<double> sum(D, 0.0), sum2(D, 0.0);
  for (int t = 0; t < kSamples; ++t) {
    const WeightVector w = sample_weights(D, N, rng);
    for (int i = 0; i < D; ++i) sum[i] += w[i], sum2[i] += w[i] * w[i];
  }
  const double expected_var = 0.005681818181818182;  // (D-1)/(D^2 (D N + 1)), frozen
  double worst_z = 0.0, worst_rel = 0.0;
  for (int i = 0; i < D; ++i) {
    const double mean = sum[i] / kSamples;
    const double var = sum2[i] / kSamples - mean * mean;
    const double z = std::abs(mean - 0.25) / std::sqrt(var / kSamples);
    const double rel = std::abs(var - expected_var) / expected_var;
    worst_z = std::max(worst_z, z);
    worst_rel = std::max(worst_rel, rel);
    c.expect(z <= 5.0, fmt::format("w_{} mean off by {:.2f} SE", i, z));
    c.expect(rel <= 0.05, fmt::format("w_{} variance off by {:.2f}%", i, 100 * rel));
  }
  return c.result(fmt::format("max |mean - 1/4| = {:.2f} SE, max variance error = {:.2f}%", worst_z, 100 * worst_rel));
}

Outcome concentration_scaling() {
  Checker c;
  const auto reps = concentration_experiment(3, {64, 128, 256}, 100, RngStream(107, 0));
  std::string summary;
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    summary += fmt::format("{}N={} median={:.4e} scaled={:.3f}", i ? ", " : "", reps[i].N, reps[i].median_deviation,
                           reps[i].scaled_median);
    lo = std::min(lo, reps[i].scaled_median);
    hi = std::max(hi, reps[i].scaled_median);
    if (i > 0) c.expect(reps[i].median_deviation < reps[i - 1].median_deviation, fmt::format("median not decreasing at N={}", reps[i].N));
  }
  c.expect(hi / lo < 3.0, fmt::format("scaled medians span a factor {:.2f}", hi / lo));
  return c.result(summary + fmt::format("; band factor {:.2f}", hi / lo));
}

Outcome overlap_law() {
  Checker c;
  std::string summary;
  for (int n : {2, 4, 8}) {
    RngStream rng(108, static_cast<std::uint64_t>(n));
    const PureState psi0 = random_pure_state(n, rng);
    std::vector<double> x2;
    x2.reserve(100000);
    for (int t = 0; t < 100000; ++t) {
      const double x = decompose_relative(random_pure_state(n, rng), psi0).x;
      x2.push_back(x * x);
    }
    const double d = rt::ks_statistic(x2, [n](double x0) { return overlap_cdf(x0, n); });
    const double crit = rt::ks_critical_1pct(x2.size());
    summary += fmt::format("{}N={} KS={:.5f}", summary.empty() ? "" : ", ", n, d);
    c.expect(d < crit, fmt::format("N={}: KS {:.5f} >= {:.5f}", n, d, crit));
  }
  return c.result(summary + fmt::format(" (1% critical {:.5f})", rt::ks_critical_1pct(100000)));
}

Outcome gradient_check() {
  Checker c;
  RngStream rng(109, 0);
  double worst = 0.0;
  int points = 0;
  while (points < 50) {
    const Index D = 2 + static_cast<Index>(rng.uniform() * 4);
    const Index N = 2 + static_cast<Index>(rng.uniform() * 7);
    const double p = std::vector<double>{0.15, 0.3, 0.5, 0.9, 1.0, 2.0}[static_cast<std::size_t>(points % 6)];
    const RandomUnitaryChannel ch = sample_channel(D, N, rng);
    const bool product = points % 5 == 4 && N <= 4;
    const CVector x = random_pure_state(product ? N * N : N, rng).amplitudes();
    auto check = [&](const auto& obj) {
      const auto ev = obj.evaluate(x, true);
      if (!ev.smooth) return;  // only non-degenerate points count
      const CVector analytic = project_tangent(x, ev.gradient);
      const double rel = (analytic - obj.finite_difference_gradient(x, 1e-6)).norm() / analytic.norm();
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-5, fmt::format("point {} (D={}, N={}, p={}): relative error {:.3e}", points, D, N, p, rel));
      ++points;
    };
    if (product) {
      const RandomUnitaryChannel conj = complex_conjugate(ch);
      check(OutputEntropyObjective(detail::ProductChannelAction(ch, conj), RenyiOrder(p)));
    } else {
      check(OutputEntropyObjective(detail::SingleChannelAction(ch), RenyiOrder(p)));
    }
  }
  return c.result(fmt::format("50 points, max relative error {:.3e}", worst));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  Checker c;
  const fs::path root = fs::temp_directory_path() / fmt::format("rlab_acceptance_{}", ::getpid());
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"critical"},
      {"bound", "--kraus", "4", "--p", "0.15"},
      {"violation-search", "--kraus", "4", "--dim", "4", "--p", "0.15", "--channels", "3", "--starts", "4", "--seed", "10"},
      {"concentration", "--kraus", "3", "--dims", "32,64", "--trials", "20", "--seed", "10"},
      {"q-lambda", "--kraus", "3", "--dim", "32", "--channels", "5", "--trials", "20", "--seed", "10"},
      {"near-event", "--kraus", "4", "--dim", "32", "--trials", "20", "--starts", "4", "--seed", "10"},
      {"scan", "--kraus", "3"},
      {"sample-channel", "--kraus", "4", "--dim", "8", "--seed", "10"},
      {"minimize", "--kraus", "4", "--dim", "8", "--p", "0.5", "--starts", "8", "--seed", "10"},
  };
  int k = 0;
  for (const auto& cmd : commands) {
    std::vector<std::string> files;
    for (const char* tag : {"a", "b"}) {
      const fs::path out = root / fmt::format("{}{}", tag, k);
      std::vector<std::string> args = cmd;
      args.insert(args.end(), {"--out", out.string()});
      std::ostringstream so, se;
      const int code = cli::run_cli(args, so, se);
      c.expect(code == 0, cmd[0] + " exited " + std::to_string(code) + ": " + se.str());
      if (code != 0) break;
      for (const auto& e : fs::directory_iterator(out)) files.push_back(slurp(e.path() / "rows.jsonl"));
    }
    c.expect(files.size() == 2 && files[0] == files[1] && !files[0].empty(), cmd[0] + ": rows.jsonl differs between runs");
    ++k;
  }
  fs::remove_all(root);
  return c.result(fmt::format("{} subcommands rerun with identical flags and seed", commands.size()));
}

Outcome violation_soundness() {
  Checker c;
  std::string summary;
  for (int N : {8, 16, 32}) {
    cli::ViolationArgs args;
    args.kraus = 4;
    args.dim = N;
    args.p = 0.15;
    args.channels = 10;
    args.seed = 111;
    args.opt.starts = 4;
    args.opt.max_iters = 50;
    const cli::CommandOutput out = cli::cmd_violation_search(args);
    c.expect(out.rows.size() == 10, fmt::format("N={}: {} rows", N, out.rows.size()));
    for (const auto& row : out.rows) {
      std::map<std::string, double> m(row.metrics.begin(), row.metrics.end());
      const double h1 = m.at("H1"), h2 = m.at("H2"), hphi = m.at("H_phi"), gap = m.at("gap");
      c.expect(h2 <= hphi + 1e-9, fmt::format("N={} channel {}: H2 {} > H_phi {}", N, row.trial, h2, hphi));
      c.expect(h2 <= 2.0 * h1 + 1e-9, fmt::format("N={} channel {}: H2 {} > 2 H1 {}", N, row.trial, h2, 2 * h1));
      c.expect(std::isfinite(gap), fmt::format("N={} channel {}: gap not finite", N, row.trial));
    }
    const bool has_summary = out.metrics.count("min_gap") && out.metrics.count("median_gap") &&
                             std::any_of(out.console.begin(), out.console.end(), [](const std::string& s) { return s.rfind("summary:", 0) == 0; });
    c.expect(has_summary, fmt::format("N={}: summary missing", N));
    summary += fmt::format("{}N={} gap min/median/max {:+.2e}/{:+.2e}/{:+.2e}", summary.empty() ? "" : ", ", N,
                           out.metrics.at("min_gap"), out.metrics.at("median_gap"), out.metrics.at("max_gap"));
  }
  return c.result(summary);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "critical constants", 1.0, critical_constants},
      {2, "spectral equivalence", 10.0, spectral_equivalence},
      {3, "bound chain", 60.0, bound_chain},
      {4, "optimizer vs grid oracle", 120.0, optimizer_oracle},
      {5, "entropy identities", 1.0, entropy_identities},
      {6, "weight law", 10.0, weight_law},
      {7, "concentration scaling", 180.0, concentration_scaling},
      {8, "overlap law", 30.0, overlap_law},
      {9, "gradient check", 10.0, gradient_check},
      {10, "CLI determinism", 0.0, cli_determinism},
      {11, "violation-search soundness", 600.0, violation_soundness},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& cr : criteria) {
    if (!selected.empty() && !selected.count(cr.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.time_limit_s > 0.0 && secs >= cr.time_limit_s) {
      o.pass = false;
      o.detail += fmt::format("; runtime {:.2f} s exceeds {:.0f} s", secs, cr.time_limit_s);
    }
    failed += !o.pass;
    std::cout << fmt::format("[{}] criterion {:2d} {}: {} ({:.2f} s)", o.pass ? "PASS" : "FAIL", cr.id, cr.name, o.detail, secs)
              << std::endl;
  }
  std::cout << (failed ? fmt::format("{} criterion(s) failed", failed) : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
