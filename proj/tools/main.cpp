// concent CLI: recover covariance spectra from CSV data, run synthetic
// recovery experiments, and run sample-spectrum concentration studies.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "concent/concent.hpp"
#include "concent/estimator.hpp"
#include "concent/metrics.hpp"
#include "concent/simulators.hpp"
#include "concent/version.hpp"
#include "cli_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace concent;
using concent_cli::CliError;
using concent_cli::g17;

namespace {

// Stream-space partition per seed: run() uses streams [0, loops*(K+1)),
// data synthesis and concentration reps start far above.
constexpr std::uint64_t kDataStream = std::uint64_t(1) << 32;
constexpr std::uint64_t kStudyStream = std::uint64_t(2) << 32;

struct CommonOptions {
  int loops = 10;
  int avg_k = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "./out";
};

ConcentConfig make_config(const CommonOptions& opts, std::uint64_t seed,
                          Index n) {
  ConcentConfig cfg;
  cfg.loops = opts.loops;
  cfg.avg_k = opts.avg_k;
  cfg.seed = seed;
  cfg.sample_count = n;
  return cfg;
}

std::vector<double> split_params(const std::string& body,
                                 const std::string& spec) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = body.find(',', pos);
    const std::string tok = concent_cli::trim(
        comma == std::string::npos ? body.substr(pos)
                                   : body.substr(pos, comma - pos));
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size())
      throw CliError("invalid shape parameter '" + tok + "' in '" + spec + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// Shape syntax: constant:V | linear:LO,HI | power:EXP,XHI |
// step:V1xF1,V2xF2,... (fractions of p, summing to 1) | sparselinear:HI,ZF
SpectrumShape parse_shape(const std::string& spec, Index p) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos)
    throw CliError("shape '" + spec + "' must look like name:params");
  const std::string name = spec.substr(0, colon);
  const std::string body = spec.substr(colon + 1);
  if (name == "constant") {
    const auto v = split_params(body, spec);
    if (v.size() != 1) throw CliError("constant shape takes one parameter");
    return ConstantShape{v[0]};
  }
  if (name == "linear") {
    const auto v = split_params(body, spec);
    if (v.size() != 2) throw CliError("linear shape takes lo,hi");
    return LinearShape{v[0], v[1]};
  }
  if (name == "power") {
    const auto v = split_params(body, spec);
    if (v.size() != 2) throw CliError("power shape takes exponent,x_hi");
    return PowerShape{v[0], v[1]};
  }
  if (name == "sparselinear") {
    const auto v = split_params(body, spec);
    if (v.size() != 2) throw CliError("sparselinear shape takes hi,zero_fraction");
    return SparseLinearShape{v[0], v[1]};
  }
  if (name == "step") {
    StepShape shape;
    std::vector<std::pair<double, double>> blocks;  // value, fraction
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = body.find(',', pos);
      const std::string tok = concent_cli::trim(
          comma == std::string::npos ? body.substr(pos)
                                     : body.substr(pos, comma - pos));
      const std::size_t x = tok.find('x');
      if (x == std::string::npos)
        throw CliError("step block '" + tok + "' must look like VALUExFRACTION");
      const auto val = split_params(tok.substr(0, x), spec);
      const auto frac = split_params(tok.substr(x + 1), spec);
      if (val.size() != 1 || frac.size() != 1)
        throw CliError("step block '" + tok + "' must look like VALUExFRACTION");
      blocks.emplace_back(val[0], frac[0]);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    double total = 0;
    for (const auto& [value, fraction] : blocks) {
      if (!(fraction >= 0)) throw CliError("step fractions must be >= 0");
      total += fraction;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw CliError("step fractions must sum to 1");
    // cumulative rounding so the counts always sum to p
    double cum = 0;
    Index assigned = 0;
    for (const auto& [value, fraction] : blocks) {
      cum += fraction;
      const Index upto = static_cast<Index>(std::llround(cum * static_cast<double>(p)));
      shape.blocks.emplace_back(value, upto - assigned);
      assigned = upto;
    }
    return shape;
  }
  throw CliError("unknown shape '" + name +
                 "' (expected constant, linear, power, step or sparselinear)");
}

std::string shape_to_string(const std::string& raw) { return raw; }

ordered_json spectrum_json(const Spectrum& s) {
  ordered_json arr = ordered_json::array();
  for (Index j = 0; j < s.size(); ++j) arr.push_back(s[j]);
  return arr;
}

ordered_json make_manifest(const std::string& subcommand, std::uint64_t seed,
                           const std::optional<std::string>& digest,
                           ordered_json config) {
  ordered_json m;
  m["subcommand"] = subcommand;
  m["version"] = kVersion;
  m["seed"] = seed;
  if (digest)
    m["input_digest"] = *digest;
  else
    m["input_digest"] = nullptr;
  m["config"] = std::move(config);
  return m;
}

fs::path prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

// ---------------------------------------------------------------- recover

struct RecoverOptions {
  CommonOptions common;
  std::string input;
  bool header = false;
  bool centered = false;
  bool curves = false;
};

int cmd_recover(const RecoverOptions& opt) {
  const std::string bytes = concent_cli::read_file_bytes(opt.input);
  const Eigen::MatrixXd data =
      concent_cli::parse_numeric_csv(bytes, opt.input, opt.header);
  const Index n = data.rows();
  const Index p = data.cols();
  if (p < 1) throw CliError(opt.input + ": no feature columns");

  CovarianceOptions cov;
  cov.centered = opt.centered;
  const Spectrum sample = sample_spectrum(data, cov);
  const ConcentConfig cfg = make_config(opt.common, opt.common.seed, n);
  const RecoveryResult result = run(sample, cfg);

  ordered_json config;
  config["loops"] = cfg.loops;
  config["avg_k"] = cfg.avg_k;
  config["seed"] = cfg.seed;
  config["norm"] = "l2";
  config["ratio_floor"] = cfg.ratio_floor;
  config["centered"] = opt.centered;
  config["header"] = opt.header;
  config["n"] = n;
  config["p"] = p;
  const ordered_json manifest =
      make_manifest("recover", cfg.seed, concent_cli::fnv1a_hex(bytes),
                    std::move(config));

  ordered_json out;
  out["manifest"] = manifest;
  out["sample_spectrum"] = spectrum_json(sample);
  out["recovered"] = spectrum_json(result.recovered);
  ordered_json iterates = ordered_json::array();
  for (const auto& it : result.iterates) iterates.push_back(spectrum_json(it));
  out["iterates"] = std::move(iterates);

  const fs::path dir = prepare_output_dir(opt.common.output_dir);
  concent_cli::write_text_file((dir / "recover.json").string(),
                               out.dump(2) + "\n");
  if (opt.curves) {
    std::string csv = concent_cli::manifest_comment(manifest);
    csv += "index,sample,recovered\n";
    for (Index j = 0; j < p; ++j)
      csv += std::to_string(j) + "," + g17(sample[j]) + "," +
             g17(result.recovered[j]) + "\n";
    concent_cli::write_text_file((dir / "recover_curves.csv").string(), csv);
  }
  return 0;
}

// --------------------------------------------------------------- simulate

struct SimulateOptions {
  CommonOptions common;
  std::string shape;
  Index n = 100;
  Index p = 100;
  int seeds = 1;
};

int cmd_simulate(const SimulateOptions& opt) {
  if (opt.seeds < 1) throw CliError("--seeds must be >= 1");
  const SpectrumShape shape = parse_shape(opt.shape, opt.p);
  const Spectrum truth = generate_spectrum(shape, opt.p);

  ordered_json config;
  config["shape"] = shape_to_string(opt.shape);
  config["n"] = opt.n;
  config["p"] = opt.p;
  config["seeds"] = opt.seeds;
  config["loops"] = opt.common.loops;
  config["avg_k"] = opt.common.avg_k;
  config["seed"] = opt.common.seed;
  config["norm"] = "l2";
  const ordered_json manifest =
      make_manifest("simulate", opt.common.seed, std::nullopt, config);

  const fs::path dir = prepare_output_dir(opt.common.output_dir);
  std::string summary = concent_cli::manifest_comment(manifest);
  summary += "seed,shape,n,p,err_sample_rel_l2,err_concent_rel_l2\n";
  for (int s = 0; s < opt.seeds; ++s) {
    const std::uint64_t seed = opt.common.seed + static_cast<std::uint64_t>(s);
    RngStream data_rng(seed, kDataStream);
    const Eigen::MatrixXd data = synthesize_data(truth, opt.n, data_rng);
    const Spectrum sample = sample_spectrum(data);
    const RecoveryResult result = run(sample, make_config(opt.common, seed, opt.n));

    const ErrorReport err_sample = spectrum_error(sample, truth);
    const ErrorReport err_concent = spectrum_error(result.recovered, truth);
    const auto rel = [](const ErrorReport& e) {
      return e.rel_l2 ? g17(*e.rel_l2) : std::string("nan");
    };
    summary += std::to_string(seed) + ",\"" + opt.shape + "\"," +
               std::to_string(opt.n) + "," + std::to_string(opt.p) + "," +
               rel(err_sample) + "," + rel(err_concent) + "\n";

    std::string curves = concent_cli::manifest_comment(manifest);
    curves += "index,truth,sample,concent\n";
    for (Index j = 0; j < opt.p; ++j)
      curves += std::to_string(j) + "," + g17(truth[j]) + "," +
                g17(sample[j]) + "," + g17(result.recovered[j]) + "\n";
    concent_cli::write_text_file(
        (dir / ("simulate_curves_seed" + std::to_string(seed) + ".csv")).string(),
        curves);
  }
  concent_cli::write_text_file((dir / "simulate_summary.csv").string(), summary);
  return 0;
}

// ----------------------------------------------------------- concentration

struct ConcentrationOptions {
  CommonOptions common;
  std::string shape;
  Index n = 100;
  Index p = 100;
  Index reps = 100;
};

int cmd_concentration(const ConcentrationOptions& opt) {
  const SpectrumShape shape = parse_shape(opt.shape, opt.p);
  const Spectrum truth = generate_spectrum(shape, opt.p);
  const ConcentrationReport report = concentration_study(
      truth, opt.n, opt.reps, RngStream(opt.common.seed, kStudyStream));

  ordered_json config;
  config["shape"] = shape_to_string(opt.shape);
  config["n"] = opt.n;
  config["p"] = opt.p;
  config["reps"] = opt.reps;
  config["seed"] = opt.common.seed;
  const ordered_json manifest =
      make_manifest("concentration", opt.common.seed, std::nullopt, config);

  // MP overlay only for constant shapes: the limit law of the sample
  // spectrum is the value-scaled MP law with c = p/n.
  const auto* constant = std::get_if<ConstantShape>(&shape);
  const bool overlay = constant != nullptr && constant->value > 0;
  const double c = static_cast<double>(opt.p) / static_cast<double>(opt.n);

  const fs::path dir = prepare_output_dir(opt.common.output_dir);
  std::string stats = concent_cli::manifest_comment(manifest);
  stats += overlay ? "index,mean,std,mp_density\n" : "index,mean,std\n";
  for (Index j = 0; j < opt.p; ++j) {
    stats += std::to_string(j) + "," + g17(report.per_index_mean(j)) + "," +
             g17(report.per_index_std(j));
    if (overlay) {
      const double v = constant->value;
      stats += "," + g17(mp_density(report.per_index_mean(j) / v, c) / v);
    }
    stats += "\n";
  }
  concent_cli::write_text_file((dir / "concentration_stats.csv").string(), stats);

  std::string dev = concent_cli::manifest_comment(manifest);
  dev += "rep,linf_deviation_normalized\n";
  for (Index r = 0; r < opt.reps; ++r)
    dev += std::to_string(r) + "," + g17(report.max_abs_deviation(r)) + "\n";
  concent_cli::write_text_file((dir / "concentration_deviation.csv").string(),
                               dev);
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_loop_flags) {
  if (with_loop_flags) {
    cmd->add_option("--loops", opts.loops, "Recovery loop count")
        ->default_val(10);
    cmd->add_option("--avg-k", opts.avg_k, "Ratio draws averaged per loop")
        ->default_val(10);
  }
  cmd->add_option("--seed", opts.seed, "Base random seed")->default_val(0);
  cmd->add_option("--output-dir", opts.output_dir, "Output directory")
      ->default_val("./out");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance spectrum recovery and concentration experiments"};
  app.require_subcommand(1);

  RecoverOptions rec;
  CLI::App* recover =
      app.add_subcommand("recover", "Recover a spectrum from a CSV data matrix");
  recover->add_option("input", rec.input, "CSV file, rows=samples, cols=features")
      ->required();
  recover->add_flag("--header", rec.header, "Skip a single header row");
  recover->add_flag("--centered", rec.centered,
                    "Subtract the empirical mean (population convention)");
  recover->add_flag("--curves", rec.curves,
                    "Also write recover_curves.csv for plotting");
  add_common(recover, rec.common, true);

  SimulateOptions sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Synthetic recovery experiment");
  simulate->add_option("--shape", sim.shape, "True spectrum shape")->required();
  simulate->add_option("--n", sim.n, "Sample count")->default_val(100);
  simulate->add_option("--p", sim.p, "Feature count")->default_val(100);
  simulate->add_option("--seeds", sim.seeds, "Number of seeds (summary rows)")
      ->default_val(1);
  add_common(simulate, sim.common, true);

  ConcentrationOptions con;
  CLI::App* concentration = app.add_subcommand(
      "concentration", "Sample-spectrum concentration study");
  concentration->add_option("--shape", con.shape, "True spectrum shape")
      ->required();
  concentration->add_option("--n", con.n, "Sample count")->default_val(100);
  concentration->add_option("--p", con.p, "Feature count")->default_val(100);
  concentration->add_option("--reps", con.reps, "Independent repetitions")
      ->default_val(100);
  add_common(concentration, con.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (recover->parsed()) return cmd_recover(rec);
    if (simulate->parsed()) return cmd_simulate(sim);
    return cmd_concentration(con);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal failure: %s\n", e.what());
    return 1;
  }
}
