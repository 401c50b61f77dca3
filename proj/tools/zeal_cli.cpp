//
// Copyright 2026 The Zeal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// zeal: plan biases, perturb datasets, encode frames, audit and run sweeps.
//
// Exit codes: 0 success, 2 configuration error, 3 domain or feasibility
// error, 4 audit found a vulnerability.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zeal/zeal.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitVulnerable = 4;

struct Options {
  std::vector<double> epsilons;
  std::optional<double> center;
  std::optional<double> half_range;
  std::string abar;
  std::optional<int> exponent;
  std::optional<double> max_f;
  std::uint64_t seed = 1;
  std::optional<int> trials;
  std::string input;
  std::string column = "0";
  std::optional<double> feasible_min;
  std::optional<double> feasible_max;
  bool skip_out_of_feasible = false;
  std::size_t n = 1000;
  std::string out;
  std::vector<double> lambdas;
  int exponent_step = 4;
  std::string external;
  std::optional<double> x_i;
  std::optional<double> x_j;
  std::uint64_t window = zeal::audit::kDefaultWindow;
};

void Emit(const Options& opt, const std::string& body) {
  if (opt.out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream f(opt.out, std::ios::binary);
  if (!f) throw zeal::Error(zeal::ErrorCode::kConfigError, "cannot write " + opt.out);
  f << body;
}

zeal::ExperimentConfig MakeConfig(const Options& opt, zeal::AbarMode default_mode, int default_trials) {
  zeal::ExperimentConfig c;
  if (!opt.input.empty()) c.input = opt.input;
  c.column = opt.column;
  c.feasible_min = opt.feasible_min;
  c.feasible_max = opt.feasible_max;
  c.skip_out_of_feasible = opt.skip_out_of_feasible;
  c.n = opt.n;
  if (opt.center) c.center = *opt.center;
  if (opt.half_range) c.half_range = *opt.half_range;
  if (!opt.epsilons.empty()) c.epsilons = opt.epsilons;
  c.max_f = opt.max_f;
  c.exponent_step = opt.exponent_step;
  c.trials = opt.trials.value_or(default_trials);
  c.seed = opt.seed;
  c.lambdas = opt.lambdas;
  c.external_compressor = opt.external;

  c.abar_mode = default_mode;
  const std::string& a = opt.abar;
  if (a == "zero") {
    c.abar_mode = zeal::AbarMode::kZero;
  } else if (a == "planned") {
    c.abar_mode = zeal::AbarMode::kPlanned;
  } else if (a == "sweep") {
    c.abar_mode = zeal::AbarMode::kSweep;
  } else if (!a.empty()) {
    std::optional<double> raw = zeal::text::ParseHexBits(a);
    if (!raw) raw = zeal::text::ParseDouble(a);
    if (!raw || !std::isfinite(*raw)) {
      throw zeal::Error(zeal::ErrorCode::kConfigError, "--abar must be zero, planned, sweep, a number or 0x bits");
    }
    c.abar_mode = *raw == 0.0 ? zeal::AbarMode::kZero : zeal::AbarMode::kRaw;
    c.raw_abar = *raw;
  }
  if (opt.exponent) {
    if (c.abar_mode == zeal::AbarMode::kRaw) {
      throw zeal::Error(zeal::ErrorCode::kConfigError, "--exponent and a raw --abar are exclusive");
    }
    if (c.abar_mode != zeal::AbarMode::kSweep) c.abar_mode = zeal::AbarMode::kPlanned;
    c.exponent = opt.exponent;
  }
  c.Validate();
  return c;
}

zeal::Dataset DomainOnly(const zeal::ExperimentConfig& c) {
  if (c.input) return {{}, (*c.feasible_min + *c.feasible_max) / 2.0, (*c.feasible_max - *c.feasible_min) / 2.0};
  return {{}, c.center, c.half_range};
}

zeal::AbarPlan RequirePlan(const zeal::ExperimentConfig& c, const zeal::Dataset& d) {
  if (c.abar_mode != zeal::AbarMode::kPlanned) {
    throw zeal::Error(zeal::ErrorCode::kConfigError, "this command needs a planned bias (--abar planned or --exponent)");
  }
  const zeal::MechanismParams base = zeal::DeriveParams(c.epsilons.front(), d.center, d.half_range);
  return zeal::Plan(base, c.exponent, c.max_f);
}

std::string CmdPlan(const Options& opt) {
  const zeal::ExperimentConfig c = MakeConfig(opt, zeal::AbarMode::kPlanned, 10);
  const zeal::AbarPlan plan = RequirePlan(c, DomainOnly(c));
  std::ostringstream out;
  out << zeal::SerializePlan(plan) << "enclosing_exponent = " << plan.enclosing_exponent << "\n"
      << "vulnerability_exponent = " << plan.vulnerability_exponent << "\n"
      << "transmission_ratio = " << zeal::text::FormatDouble(plan.transmission_ratio) << "\n"
      << "f_estimate = " << zeal::text::FormatDouble(plan.f_estimate) << "\n"
      << "out_min = " << zeal::fpbits::ToHex(plan.params.out_min) << "\n"
      << "out_max = " << zeal::fpbits::ToHex(plan.params.out_max) << "\n";
  return out.str();
}

std::string CmdPerturb(const Options& opt) {
  const zeal::ExperimentConfig c = MakeConfig(opt, zeal::AbarMode::kZero, 10);
  const zeal::Dataset d = zeal::LoadDataset(c);
  const zeal::MechanismParams params = zeal::ParamsFor(c, c.epsilons.front(), d);
  const zeal::PrivatizedDataset p = zeal::PerturbDataset(params, d.values, c.seed);
  std::ostringstream out;
  out << "index,original,privatized\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << i << ',' << zeal::text::FormatDouble(d.values[i]) << ',' << zeal::text::FormatDouble(p.samples[i]) << '\n';
  }
  return out.str();
}

std::string CmdAggregate(const Options& opt) {
  const zeal::ExperimentConfig c = MakeConfig(opt, zeal::AbarMode::kZero, 10);
  const zeal::Dataset d = zeal::LoadDataset(c);
  const zeal::MechanismParams params = zeal::ParamsFor(c, c.epsilons.front(), d);
  const zeal::ErrorReport r =
      zeal::ComputeErrorMetrics(zeal::PerturbDataset(params, d.values, c.seed), d.values);
  std::ostringstream out;
  auto opt_num = [](const std::optional<double>& v) { return v ? zeal::text::FormatDouble(*v) : std::string("nan"); };
  out << "n = " << r.n << "\n"
      << "abar = " << zeal::fpbits::ToHex(params.bias) << "\n"
      << "avg_true = " << opt_num(r.avg_true) << "\n"
      << "avg_star = " << zeal::text::FormatDouble(r.avg_star) << "\n"
      << "delta_avg_abs = " << opt_num(r.delta_avg) << "\n"
      << "delta_avg = " << opt_num(r.rel_delta_avg) << "\n"
      << "sum_variance = " << zeal::text::FormatDouble(zeal::SumVariance(params, d.values)) << "\n";
  const std::vector<double> lambdas =
      c.lambdas.empty() ? std::vector<double>{(params.c + params.half_range) / 10.0} : c.lambdas;
  for (double lambda : lambdas) {
    out << "bound lambda=" << zeal::text::FormatDouble(lambda)
        << " abs=" << zeal::text::FormatDouble(zeal::BernsteinBoundAbs(params, d.values, lambda))
        << " rel=" << zeal::text::FormatDouble(zeal::BernsteinBoundRel(params, d.values, lambda)) << "\n";
  }
  return out.str();
}

int CmdEncode(const Options& opt) {
  if (opt.out.empty()) throw zeal::Error(zeal::ErrorCode::kConfigError, "encode writes a binary frame; pass --out");
  const zeal::ExperimentConfig c = MakeConfig(opt, zeal::AbarMode::kPlanned, 10);
  const zeal::Dataset d = zeal::LoadDataset(c);
  const zeal::AbarPlan plan = RequirePlan(c, d);
  const zeal::codec::WireFrame frame = zeal::codec::Encode(plan, zeal::PerturbDataset(plan.params, d.values, c.seed));
  const std::vector<std::uint8_t> bytes = zeal::codec::ToBytes(frame);
  Emit(opt, std::string(bytes.begin(), bytes.end()));
  std::cout << "samples = " << frame.header.count << "\n"
            << "gamma_min = " << plan.gamma_min << "\n"
            << "payload_bytes = " << frame.payload.size() << "\n"
            << "frame_bytes = " << bytes.size() << "\n"
            << "transmission_ratio = " << zeal::text::FormatDouble(plan.transmission_ratio) << "\n";
  return kExitOk;
}

std::string CmdDecode(const Options& opt) {
  if (opt.input.empty()) throw zeal::Error(zeal::ErrorCode::kConfigError, "decode needs --input <frame>");
  std::ifstream f(opt.input, std::ios::binary);
  if (!f) throw zeal::Error(zeal::ErrorCode::kFileNotFound, "cannot open " + opt.input);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const zeal::PrivatizedDataset p = zeal::codec::Decode(zeal::codec::FromBytes(bytes));
  std::ostringstream out;
  out << "index,privatized\n";
  for (std::size_t i = 0; i < p.size(); ++i) out << i << ',' << zeal::text::FormatDouble(p.samples[i]) << '\n';
  return out.str();
}

int CmdAudit(const Options& opt) {
  const zeal::ExperimentConfig c = MakeConfig(opt, zeal::AbarMode::kZero, 10);
  const zeal::AuditRun run = zeal::RunAudit(c, opt.x_i, opt.x_j, opt.window);
  Emit(opt, run.report);
  return run.verdict.vulnerable ? kExitVulnerable : kExitOk;
}

std::string CmdCompress(const Options& opt) {
  const zeal::ExperimentConfig c = MakeConfig(opt, zeal::AbarMode::kPlanned, 10);
  const zeal::Dataset d = zeal::LoadDataset(c);
  const zeal::MechanismParams params = zeal::ParamsFor(c, c.epsilons.front(), d);
  const zeal::PrivatizedDataset p = zeal::PerturbDataset(params, d.values, c.seed);
  const zeal::compress::CompressionReport r =
      c.external_compressor.empty() ? zeal::compress::Measure(d.values, p.samples)
                                    : zeal::compress::MeasureExternal(d.values, p.samples, c.external_compressor);
  std::ostringstream out;
  out << "method = " << zeal::compress::MethodName(r.method) << "\n"
      << "abar = " << zeal::fpbits::ToHex(params.bias) << "\n"
      << "shared_bits = " << zeal::fpbits::SharedBits(p.samples).shared_prefix_len << "\n"
      << "cr_original = " << zeal::text::FormatDouble(r.cr_original) << "\n"
      << "cr_privatized = " << zeal::text::FormatDouble(r.cr_privatized) << "\n"
      << "improvement = " << zeal::text::FormatDouble(r.improvement) << "\n";
  return out.str();
}

int ExitCodeFor(zeal::ErrorCode code) {
  switch (code) {
    case zeal::ErrorCode::kConfigError:
    case zeal::ErrorCode::kFileNotFound:
    case zeal::ErrorCode::kInvalidPlan:
    case zeal::ErrorCode::kExternalCompressor:
      return kExitConfig;
    default:
      return kExitDomain;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biased piecewise perturbation: planning, encoding, auditing and sweeps"};
  app.set_config("--config", "", "Flat key = value file; flags given on the command line win");
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--epsilon", opt.epsilons, "Privacy budget; a comma list for sweep-error")->delimiter(',');
  app.add_option("--center", opt.center, "Domain center for synthetic data (default 10)");
  app.add_option("--half-range", opt.half_range, "Domain half range for synthetic data (default 5)");
  app.add_option("--abar", opt.abar, "zero, planned, sweep, a decimal value or 0x-prefixed bits");
  app.add_option("--exponent", opt.exponent, "Plan the bias at this binade exponent");
  app.add_option("--max-f", opt.max_f, "Largest finite-precision error the automatic plan accepts (default 1e-6)");
  app.add_option("--seed", opt.seed, "Root seed");
  app.add_option("--trials", opt.trials, "Trials (default 100 for sweep-error, else 10)");
  app.add_option("--input", opt.input, "CSV input, or a frame file for decode");
  app.add_option("--column", opt.column, "CSV column name or zero-based index");
  app.add_option("--feasible-min", opt.feasible_min, "Lower end of the feasible interval");
  app.add_option("--feasible-max", opt.feasible_max, "Upper end of the feasible interval");
  app.add_flag("--skip-out-of-feasible", opt.skip_out_of_feasible, "Drop rows outside the feasible interval");
  app.add_option("--n", opt.n, "Synthetic dataset size");
  app.add_option("--out", opt.out, "Output file (stdout if omitted)");
  app.add_option("--lambda", opt.lambdas, "Lambda values, comma separated")->delimiter(',');
  app.add_option("--exponent-step", opt.exponent_step, "Exponent step of the sweep-error bias grid");
  app.add_option("--external", opt.external, "Shell command used as an external compressor");
  app.add_option("--x-i", opt.x_i, "First audited input (default center)");
  app.add_option("--x-j", opt.x_j, "Second audited input (default center + half range)");
  app.add_option("--window", opt.window, "Audit window size in p_C steps");

  auto* plan = app.add_subcommand("plan", "Choose the bias and report gamma_min and TR");
  auto* perturb = app.add_subcommand("perturb", "Privatize a dataset");
  auto* aggregate = app.add_subcommand("aggregate", "Privatize, average and report error and bounds");
  auto* encode = app.add_subcommand("encode", "Privatize under a plan and write a wire frame");
  auto* decode = app.add_subcommand("decode", "Read a wire frame back into samples");
  auto* audit = app.add_subcommand("audit", "Search for outputs reachable from only one input");
  auto* sweep_error = app.add_subcommand("sweep-error", "CSV of relative average error over epsilon and bias");
  auto* sweep_bound = app.add_subcommand("sweep-bound", "CSV of empirical exceedance against the bounds");
  auto* sweep_trcr = app.add_subcommand("sweep-trcr", "CSV of TR, CR and error over the bias exponent");
  auto* compress = app.add_subcommand("compress", "Compression ratio of original and privatized data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*plan) Emit(opt, CmdPlan(opt));
    if (*perturb) Emit(opt, CmdPerturb(opt));
    if (*aggregate) Emit(opt, CmdAggregate(opt));
    if (*encode) return CmdEncode(opt);
    if (*decode) Emit(opt, CmdDecode(opt));
    if (*audit) return CmdAudit(opt);
    if (*sweep_error) Emit(opt, zeal::RunErrorSweep(MakeConfig(opt, zeal::AbarMode::kSweep, 100)));
    if (*sweep_bound) Emit(opt, zeal::RunBoundCheck(MakeConfig(opt, zeal::AbarMode::kZero, 10)));
    if (*sweep_trcr) Emit(opt, zeal::RunTrCrSweep(MakeConfig(opt, zeal::AbarMode::kPlanned, 10)));
    if (*compress) Emit(opt, CmdCompress(opt));
  } catch (const zeal::Error& e) {
    std::cerr << "zeal: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  }
  return kExitOk;
}
