#ifndef RLAB_CLI_COMMANDS_HPP
#define RLAB_CLI_COMMANDS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cli/record.hpp"

namespace rlab::cli {

/// Bad flag value; the message names the flag. Maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BoundArgs {
  int kraus = 2;
  double p = 0.5;
};

struct MinimizeFlags {
  int starts = 32;
  int max_iters = 2000;
  double grad_tol = 1e-8;
  double value_tol = 1e-10;
  double fd_step = 1e-6;
  int special_starts = 1;
};

struct ViolationArgs {
  int kraus = 4;
  int dim = 8;
  double p = 0.15;
  int channels = 10;
  std::uint64_t seed = 0;
  MinimizeFlags opt;
};

struct ConcentrationArgs {
  int kraus = 3;
  std::string dims = "64,128,256";
  int trials = 100;
  std::string lambdas = "0.5,1,2,3,5";
  std::uint64_t seed = 0;
};

struct QLambdaArgs {
  int kraus = 3;
  int dim = 128;
  std::string lambdas = "0.5,1,2,3,5";
  int channels = 50;
  int trials = 100;
  std::uint64_t seed = 0;
};

struct NearEventArgs {
  int kraus = 4;
  int dim = 256;
  double p = 0.5;
  double y0 = 0.5;
  int trials = 200;
  std::string channel;  // optional channel file
  std::uint64_t seed = 0;
  MinimizeFlags opt;
};

struct ScanArgs {
  int kraus = 3;
  std::string p_grid = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95";
};

struct SampleChannelArgs {
  int kraus = 4;
  int dim = 8;
  std::uint64_t seed = 0;
  std::string save;
};

struct MinimizeArgs {
  std::string channel;  // channel file; when empty a channel is sampled from (kraus, dim, seed)
  int kraus = 4;
  int dim = 8;
  double p = 0.5;
  std::uint64_t seed = 0;
  MinimizeFlags opt;
};

std::vector<double> parse_real_list(const std::string& text, const std::string& flag);
std::vector<long> parse_int_list(const std::string& text, const std::string& flag);

CommandOutput cmd_critical();
CommandOutput cmd_bound(const BoundArgs& a);
CommandOutput cmd_violation_search(const ViolationArgs& a);
CommandOutput cmd_concentration(const ConcentrationArgs& a);
CommandOutput cmd_q_lambda(const QLambdaArgs& a);
CommandOutput cmd_near_event(const NearEventArgs& a);
CommandOutput cmd_scan(const ScanArgs& a);
CommandOutput cmd_sample_channel(const SampleChannelArgs& a);
CommandOutput cmd_minimize(const MinimizeArgs& a);

}  // namespace rlab::cli

#endif  // RLAB_CLI_COMMANDS_HPP
