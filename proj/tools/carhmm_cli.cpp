#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carhmm/decode.hpp"
#include "carhmm/diagnostics.hpp"
#include "carhmm/error.hpp"
#include "carhmm/fit.hpp"
#include "carhmm/markov.hpp"
#include "carhmm/preprocess.hpp"
#include "carhmm/simulate.hpp"
#include "carhmm/track_io.hpp"
#include "json.hpp"

#ifndef CARHMM_VERSION
#define CARHMM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace carhmm;

namespace {

constexpr int kUsageError = 2;
constexpr int kDomainError = 1;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Records one subcommand run; written last into the output directory.
struct Manifest {
  std::string subcommand;
  json flags = json::object();
  json inputs = json::object();
  std::optional<std::uint64_t> seed;
  std::string started = utc_now();

  void input(const fs::path& p) { inputs[p.string()] = fnv1a_hex(read_file(p)); }

  void write(const fs::path& dir) const {
    json j;
    j["schema"] = "carhmm-manifest/1";
    j["subcommand"] = subcommand;
    j["flags"] = flags;
    j["inputs"] = inputs;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["tool_version"] = CARHMM_VERSION;
    j["started"] = started;
    j["finished"] = utc_now();
    write_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

fs::path prepare_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream out;
  fn(out);
  write_file(path, out.str());
}

/// Series CSV plus the sidecar at the same stem with a .json extension.
ObservationSeries load_series(const fs::path& csv_path, Manifest& manifest) {
  manifest.input(csv_path);
  std::istringstream csv(read_file(csv_path));
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::string side;
  if (fs::exists(sidecar)) {
    manifest.input(sidecar);
    side = read_file(sidecar);
  }
  return read_series(csv, side);
}

void save_series(const fs::path& dir, const ObservationSeries& s) {
  write_stream(dir / "series.csv", [&](std::ostream& o) { write_series_csv(o, s); });
  write_file(dir / "series.json", series_sidecar_json(s) + "\n");
}

ParameterFile load_parameter_file(const fs::path& p, Manifest& manifest) {
  manifest.input(p);
  return read_params(read_file(p));
}

// Numbers pass through format_real so that every CSV cell carries 17 digits.
std::string csv_row(std::initializer_list<std::string> cells) {
  std::string out;
  for (const auto& c : cells) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out + "\n";
}

std::string degeneracy_name(const std::optional<DegeneracyReason>& r) {
  return r ? std::string(to_string(*r)) : std::string();
}

// ---- scenario / study JSON ----

Scenario scenario_from_json(const json& j) {
  Scenario sc;
  if (!j.contains("seed")) {
    throw Error(ErrorCode::SchemaMismatch, "scenario needs an explicit seed");
  }
  sc.name = j.value("name", std::string("study"));
  sc.truth = read_params(j.at("truth").dump()).model;
  sc.track_length = j.value("track_length", std::size_t{1000});
  sc.n_sims = j.value("n_sims", std::size_t{100});
  sc.fit_k = j.value("fit_k", std::size_t{0});
  sc.seed = j.at("seed").get<std::uint64_t>();
  sc.standardize = j.value("standardize", true);
  sc.fit.family = parse_family(j.value("family", std::string(to_string(sc.truth.family))));
  sc.fit.fix_phi_zero = j.value("fix_phi_zero", false);
  sc.fit.max_restarts = j.value("max_restarts", 10);
  if (sc.track_length < 2 || sc.n_sims == 0 || sc.fit.max_restarts < 1) {
    throw Error(ErrorCode::DomainError, "track_length >= 2, n_sims >= 1, max_restarts >= 1");
  }
  return sc;
}

json study_json(const Scenario& sc, const StudyResult& r) {
  json j;
  j["schema"] = "carhmm-study/1";
  j["name"] = r.name;
  j["seed"] = sc.seed;
  j["track_length"] = sc.track_length;
  j["fit_k"] = sc.fit_k == 0 ? sc.truth.k() : sc.fit_k;
  j["family"] = std::string(to_string(sc.fit.family));
  j["fix_phi_zero"] = sc.fit.fix_phi_zero;
  j["d0_rule"] = "gamma(mean = mu_rl, sd = sigma) of the initial state";
  j["replicates"] = r.replicates;
  j["included"] = r.included;
  j["nonconverged_or_degenerate"] = r.nonconverged;
  j["state_error"] = {{"q1", r.error_q1}, {"median", r.error_median}, {"q3", r.error_q3}};
  json bias = json::array();
  for (const auto& b : r.bias) {
    bias.push_back({{"name", b.name}, {"truth", b.truth}, {"median_bias", b.median_bias}});
  }
  j["bias"] = bias;
  return j;
}

void write_replicates_csv(std::ostream& out, const StudyResult& r) {
  out << "index,included,converged,degenerate,restarts_used,state_error,loglik,loglik_truth";
  std::vector<std::string> names;
  for (const auto& o : r.outcomes) {
    if (o.estimate.k() > 0) {
      for (const auto& [name, v] : flatten_parameters(o.estimate)) names.push_back(name);
      break;
    }
  }
  for (const auto& n : names) out << ",\"" << n << "\"";
  out << "\n";
  for (const auto& o : r.outcomes) {
    out << o.index << ',' << int(o.included) << ',' << int(o.converged) << ','
        << degeneracy_name(o.degenerate) << ',' << o.restarts_used << ','
        << format_real(o.state_error) << ',' << format_real(o.loglik) << ','
        << format_real(o.loglik_truth);
    if (o.estimate.k() > 0) {
      for (const auto& [name, v] : flatten_parameters(o.estimate)) out << ',' << format_real(v);
    } else {
      for (std::size_t i = 0; i < names.size(); ++i) out << ',';
    }
    out << "\n";
  }
}

// ---- subcommands ----

void add_out(CLI::App* sub, std::string& dir, bool required = true) {
  auto* opt = sub->add_option("-o,--out", dir, "Output directory");
  if (required) opt->required();
}

std::vector<double> parse_steps(const std::string& text) {
  // "lo:hi:by" or a comma-separated list.
  std::vector<double> steps;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, by = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> by) || c1 != ':' || c2 != ':' || !(by > 0) || hi < lo) {
      throw CLI::ValidationError("--steps", "expected lo:hi:by with by > 0");
    }
    for (int i = 0; lo + i * by <= hi + 1e-9 * by; ++i) steps.push_back(lo + i * by);
  } else {
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        steps.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw CLI::ValidationError("--steps", "bad number '" + item + "'");
      }
    }
  }
  for (double s : steps) {
    if (!(s > 0)) throw CLI::ValidationError("--steps", "steps must be > 0");
  }
  if (steps.empty()) throw CLI::ValidationError("--steps", "no steps given");
  return steps;
}

struct TrackOptions {
  std::string path;
  std::string time_col = "time", lat_col = "lat", lon_col = "lon";
  bool iso = false;

  void add(CLI::App* sub) {
    sub->add_option("track", path, "Track CSV with a header row")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--time-col", time_col, "Time column name")->capture_default_str();
    sub->add_option("--lat-col", lat_col, "Latitude column name")->capture_default_str();
    sub->add_option("--lon-col", lon_col, "Longitude column name")->capture_default_str();
    sub->add_flag("--iso-time", iso, "Times are ISO-8601 instead of minutes");
  }

  RawTrack load(Manifest& m) const {
    m.input(path);
    m.flags["time_col"] = time_col;
    m.flags["lat_col"] = lat_col;
    m.flags["lon_col"] = lon_col;
    m.flags["iso_time"] = iso;
    return parse_track_csv(fs::path(path), {time_col, lat_col, lon_col},
                           iso ? TimeFormat::iso8601 : TimeFormat::numeric_minutes);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CarHMM movement-model toolkit"};
  app.set_version_flag("--version", std::string("carhmm ") + CARHMM_VERSION);
  app.require_subcommand(1);

  std::string out_dir;
  std::function<void()> action;

  // preprocess
  TrackOptions pre_track;
  double pre_step = 60, pre_cutoff = 120;
  bool pre_raw_scale = false;
  auto* pre = app.add_subcommand("preprocess", "Grid a track and derive steps and turns");
  pre_track.add(pre);
  pre->add_option("--time-step", pre_step, "Grid spacing in minutes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  pre->add_option("--cutoff", pre_cutoff, "Largest gap in minutes within a group")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  pre->add_flag("--no-standardize", pre_raw_scale, "Keep steps in km");
  add_out(pre, out_dir);
  pre->callback([&] {
    action = [&] {
      Manifest m{"preprocess"};
      const auto track = pre_track.load(m);
      const GridSpec spec{pre_step, pre_cutoff};
      m.flags["time_step"] = pre_step;
      m.flags["cutoff"] = pre_cutoff;
      m.flags["standardize"] = !pre_raw_scale;
      const auto series = preprocess_track(track, spec, !pre_raw_scale);
      const auto metrics = grid_metrics(track, spec);
      const fs::path dir = prepare_dir(out_dir);
      save_series(dir, series);
      if (spec.wide_cutoff()) std::cerr << "warning: cutoff exceeds twice the time step\n";
      std::cout << "groups " << series.n_groups << " of " << series.n_raw_groups
                << ", pairs " << series.n_pairs() << ", n_prop " << format_real(metrics.n_prop)
                << ", n_adj " << format_real(metrics.n_adj) << "\n";
      m.write(dir);
    };
  });

  // grid-search
  TrackOptions gs_track;
  std::string gs_steps = "60:120:3";
  auto* gs = app.add_subcommand("grid-search", "Tabulate n_prop / n_adj over candidate grids");
  gs_track.add(gs);
  gs->add_option("--steps", gs_steps, "Candidate steps: lo:hi:by or a comma list")
      ->capture_default_str();
  add_out(gs, out_dir);
  gs->callback([&] {
    action = [&] {
      Manifest m{"grid-search"};
      const auto track = gs_track.load(m);
      m.flags["steps"] = gs_steps;
      const auto steps = parse_steps(gs_steps);
      const auto res = choose_grid(track, steps);
      const fs::path dir = prepare_dir(out_dir);
      write_stream(dir / "grid.csv", [&](std::ostream& o) {
        o << "time_step,group_cutoff,n_prop,n_adj,n_raw_locations,n_interp_locations,n_groups,"
             "objective\n";
        for (const auto& c : res.table) {
          o << csv_row({format_real(c.spec.time_step), format_real(c.spec.group_cutoff),
                        format_real(c.metrics.n_prop), format_real(c.metrics.n_adj),
                        std::to_string(c.metrics.n_raw_locations),
                        std::to_string(c.metrics.n_interp_locations),
                        std::to_string(c.metrics.n_groups), format_real(c.objective)});
        }
      });
      json best = {{"time_step", res.best.spec.time_step},
                   {"group_cutoff", res.best.spec.group_cutoff},
                   {"n_prop", res.best.metrics.n_prop},
                   {"n_adj", res.best.metrics.n_adj},
                   {"n_groups", res.best.metrics.n_groups},
                   {"n_interp_locations", res.best.metrics.n_interp_locations},
                   {"groups_dominate", res.best.metrics.groups_dominate()},
                   {"objective", res.best.objective}};
      write_file(dir / "best.json", best.dump(2) + "\n");
      std::cout << best.dump(2) << "\n";
      m.write(dir);
    };
  });

  // fit
  std::string fit_series;
  std::size_t fit_k = 0;
  std::string fit_family = "gamma";
  int fit_restarts = 10;
  std::uint64_t fit_seed = 0;
  bool fit_phi_zero = false;
  auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit with random restarts");
  fit->add_option("series", fit_series, "Series CSV from preprocess (sidecar read if present)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--k", fit_k, "Number of states")->required()->check(CLI::Range(1, 10));
  fit->add_option("--family", fit_family, "Step family")
      ->capture_default_str()
      ->check(CLI::IsMember({"gamma", "lognormal"}));
  fit->add_option("--restarts", fit_restarts, "Maximum random restarts")
      ->capture_default_str()
      ->check(CLI::Range(1, 100000));
  fit->add_option("--seed", fit_seed, "Seed for the restart streams")->required();
  fit->add_flag("--fix-phi-zero", fit_phi_zero, "Fix phi = 0 (plain HMM)");
  add_out(fit, out_dir);
  fit->callback([&] {
    action = [&] {
      Manifest m{"fit"};
      m.seed = fit_seed;
      m.flags = {{"k", fit_k}, {"family", fit_family}, {"restarts", fit_restarts},
                 {"seed", fit_seed}, {"fix_phi_zero", fit_phi_zero}};
      const auto series = load_series(fit_series, m);
      FitConfig cfg;
      cfg.family = parse_family(fit_family);
      cfg.fix_phi_zero = fit_phi_zero;
      cfg.max_restarts = fit_restarts;
      cfg.seed = fit_seed;
      const auto r = fit_multistart(series, fit_k, cfg);
      const fs::path dir = prepare_dir(out_dir);
      save_params(dir / "params.json", {r.model, series.mean_step_km, series.time_step_min});
      json report = {{"schema", "carhmm-fit-report/1"},
                     {"k", fit_k},
                     {"family", fit_family},
                     {"loglik", r.loglik},
                     {"aic", r.aic},
                     {"bic", r.bic},
                     {"converged", r.converged},
                     {"degenerate", r.degenerate ? json(degeneracy_name(r.degenerate))
                                                 : json(nullptr)},
                     {"restarts_used", r.restarts_used},
                     {"iterations", r.iterations},
                     {"gradient_max_norm", r.gradient_max_norm},
                     {"termination", r.termination},
                     {"n_parameters", r.n_parameters},
                     {"n_observations", r.n_observations}};
      write_file(dir / "fit_report.json", report.dump(2) + "\n");
      std::cout << "loglik " << format_real(r.loglik) << " converged " << r.converged
                << " restarts " << r.restarts_used << "\n";
      if (!r.converged) std::cerr << "warning: no restart converged\n";
      if (r.degenerate) std::cerr << "warning: degenerate fit (" << degeneracy_name(r.degenerate)
                                  << ")\n";
      m.write(dir);
    };
  });

  // decode
  std::string dec_params, dec_series;
  auto* dec = app.add_subcommand("decode", "Viterbi state sequence");
  dec->add_option("params", dec_params, "ParameterFile JSON")->required()->check(
      CLI::ExistingFile);
  dec->add_option("series", dec_series, "Series CSV")->required()->check(CLI::ExistingFile);
  add_out(dec, out_dir);
  dec->callback([&] {
    action = [&] {
      Manifest m{"decode"};
      const auto pf = load_parameter_file(dec_params, m);
      const auto series = load_series(dec_series, m);
      const auto path = viterbi(pf.model, series);
      const fs::path dir = prepare_dir(out_dir);
      write_stream(dir / "path.csv", [&](std::ostream& o) { write_path_csv(o, path); });
      m.write(dir);
    };
  });

  // interpret
  std::string int_params;
  double int_step = 0;
  auto* inter = app.add_subcommand("interpret", "Activity budget, residency, reversion levels");
  inter->add_option("params", int_params, "ParameterFile JSON")->required()->check(
      CLI::ExistingFile);
  inter->add_option("--time-step", int_step,
                    "Grid spacing in minutes (default: from the parameter file)")
      ->check(CLI::PositiveNumber);
  add_out(inter, out_dir, false);
  inter->callback([&] {
    action = [&] {
      Manifest m{"interpret"};
      const auto pf = load_parameter_file(int_params, m);
      const double step = int_step > 0 ? int_step : pf.time_step_min.value_or(0.0);
      if (!(step > 0)) {
        throw Error(ErrorCode::DomainError, "time step unknown: pass --time-step");
      }
      m.flags["time_step"] = step;
      std::vector<double> mu;
      for (const auto& s : pf.model.states) mu.push_back(s.mu_rl);
      const auto in = interpret(pf.model.a, step, mu, pf.mean_step_km);
      json states = json::array();
      for (std::size_t b = 0; b < pf.model.k(); ++b) {
        json s = {{"state", b + 1},
                  {"delta", in.delta[b]},
                  {"residency_steps", in.residency_steps[b]},
                  {"residency_minutes", in.residency_minutes[b]},
                  {"residency", format_duration(in.residency_minutes[b])}};
        if (in.reversion_levels_km) {
          s["reversion_km_per_step"] = (*in.reversion_levels_km)[b];
          s["reversion_km_per_hour"] = (*in.reversion_levels_km)[b] * 60.0 / step;
        }
        states.push_back(s);
      }
      json j = {{"schema", "carhmm-interpretation/1"},
                {"time_step_min", step},
                {"strictly_positive", in.strictly_positive},
                {"states", states}};
      if (!in.strictly_positive) {
        std::cerr << "warning: A has zero entries (consistency condition not met)\n";
      }
      std::cout << j.dump(2) << "\n";
      if (!out_dir.empty()) {
        const fs::path dir = prepare_dir(out_dir);
        write_file(dir / "interpretation.json", j.dump(2) + "\n");
        m.write(dir);
      }
    };
  });

  // simulate
  std::string sim_params;
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Simulate one series from a fitted model");
  sim->add_option("params", sim_params, "ParameterFile JSON")->required()->check(
      CLI::ExistingFile);
  sim->add_option("--n", sim_n, "Observation pairs")->capture_default_str()->check(
      CLI::Range(std::size_t{1}, std::size_t{100000000}));
  sim->add_option("--seed", sim_seed, "Seed")->required();
  add_out(sim, out_dir);
  sim->callback([&] {
    action = [&] {
      Manifest m{"simulate"};
      m.seed = sim_seed;
      m.flags = {{"n", sim_n}, {"seed", sim_seed}};
      const auto pf = load_parameter_file(sim_params, m);
      const auto s = simulate_series(pf.model, sim_n, sim_seed);
      ObservationSeries series;
      series.groups = {s.group};
      series.n_groups = series.n_raw_groups = 1;
      series.time_step_min = pf.time_step_min.value_or(1.0);
      const fs::path dir = prepare_dir(out_dir);
      save_series(dir, series);
      write_stream(dir / "states.csv", [&](std::ostream& o) { write_path_csv(o, {s.states}); });
      write_stream(dir / "planar.csv", [&](std::ostream& o) {
        o << "idx,x,y\n";
        for (std::size_t i = 0; i < s.planar.size(); ++i) {
          o << i << ',' << format_real(s.planar[i].x) << ',' << format_real(s.planar[i].y)
            << "\n";
        }
      });
      m.write(dir);
    };
  });

  // study
  std::string study_scenario;
  unsigned study_jobs = 1;
  auto* study = app.add_subcommand("study", "Monte Carlo simulation study");
  study->add_option("scenario", study_scenario, "Scenario JSON")->required()->check(
      CLI::ExistingFile);
  study->add_option("--jobs", study_jobs, "Worker threads")->capture_default_str()->check(
      CLI::Range(1u, 1024u));
  add_out(study, out_dir);
  study->callback([&] {
    action = [&] {
      Manifest m{"study"};
      m.input(study_scenario);
      m.flags["jobs"] = study_jobs;
      json sj;
      try {
        sj = json::parse(read_file(study_scenario));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, e.what());
      }
      Scenario sc;
      try {
        sc = scenario_from_json(sj);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, e.what());
      }
      m.seed = sc.seed;
      const auto r = run_study(sc, study_jobs);
      const fs::path dir = prepare_dir(out_dir);
      write_file(dir / "study.json", study_json(sc, r).dump(2) + "\n");
      write_stream(dir / "replicates.csv", [&](std::ostream& o) { write_replicates_csv(o, r); });
      std::cout << "included " << r.included << "/" << r.replicates << ", state error q1 "
                << format_real(r.error_q1) << " median " << format_real(r.error_median)
                << " q3 " << format_real(r.error_q3) << "\n";
      m.write(dir);
    };
  });

  // diagnose
  std::string dg_params, dg_series;
  std::size_t dg_max_lag = 20, dg_lag = 1, dg_grid = 128;
  auto* dg = app.add_subcommand("diagnose", "Pseudo-residuals, ACF, QQ and lag-density grids");
  dg->add_option("params", dg_params, "ParameterFile JSON")->required()->check(
      CLI::ExistingFile);
  dg->add_option("series", dg_series, "Series CSV")->required()->check(CLI::ExistingFile);
  dg->add_option("--max-lag", dg_max_lag, "ACF lags")->capture_default_str()->check(
      CLI::Range(std::size_t{1}, std::size_t{10000}));
  dg->add_option("--lag", dg_lag, "Lag for the lag-density")->capture_default_str()->check(
      CLI::Range(std::size_t{1}, std::size_t{10000}));
  dg->add_option("--grid", dg_grid, "Lag-density grid size")->capture_default_str()->check(
      CLI::Range(std::size_t{2}, std::size_t{2048}));
  add_out(dg, out_dir);
  dg->callback([&] {
    action = [&] {
      Manifest m{"diagnose"};
      m.flags = {{"max_lag", dg_max_lag}, {"lag", dg_lag}, {"grid", dg_grid}};
      const auto pf = load_parameter_file(dg_params, m);
      const auto series = load_series(dg_series, m);
      const fs::path dir = prepare_dir(out_dir);
      const auto path = viterbi(pf.model, series);
      const auto sr = diag::step_residuals(pf.model, series);
      const auto ar = diag::angle_residuals(pf.model, series);
      write_stream(dir / "residuals.csv", [&](std::ostream& o) {
        o << "group,idx,state,step_residual,angle_residual\n";
        for (std::size_t g = 0; g < sr.size(); ++g)
          for (std::size_t t = 0; t < sr[g].size(); ++t)
            o << g + 1 << ',' << t + 1 << ',' << path[g][t] + 1 << ',' << format_real(sr[g][t])
              << ',' << format_real(ar[g][t]) << "\n";
      });
      const auto sacf = diag::residual_acf(sr, dg_max_lag);
      const auto aacf = diag::residual_acf(ar, dg_max_lag);
      write_stream(dir / "acf.csv", [&](std::ostream& o) {
        o << "lag,step_acf,angle_acf,band\n";
        for (std::size_t l = 0; l < dg_max_lag; ++l)
          o << l + 1 << ',' << format_real(sacf.values[l]) << ',' << format_real(aacf.values[l])
            << ',' << format_real(sacf.band) << "\n";
      });
      const auto sqq = diag::qq_uniform(sr);
      const auto aqq = diag::qq_uniform(ar);
      write_stream(dir / "qq.csv", [&](std::ostream& o) {
        o << "theoretical,step_empirical,angle_empirical\n";
        for (std::size_t i = 0; i < sqq.size(); ++i)
          o << format_real(sqq[i].theoretical) << ',' << format_real(sqq[i].empirical) << ','
            << format_real(aqq[i].empirical) << "\n";
      });
      const auto ld = diag::lag_density(series, dg_lag, dg_grid);
      write_stream(dir / "lag_density.csv", [&](std::ostream& o) {
        o << "x,y,density\n";
        for (std::size_t i = 0; i < ld.grid_size; ++i)
          for (std::size_t j = 0; j < ld.grid_size; ++j)
            o << format_real(ld.grid[i]) << ',' << format_real(ld.grid[j]) << ','
              << format_real(ld.at(i, j)) << "\n";
      });
      json per_state = json::array();
      for (const auto& p : diag::partition_by_state(sr, path, pf.model.k())) {
        per_state.push_back({{"state", p.state + 1},
                             {"n", p.residuals.size()},
                             {"small_sample", p.small_sample}});
      }
      json summary = {{"schema", "carhmm-diagnostics/1"},
                      {"n", sacf.n},
                      {"ks_step", diag::ks_uniform(sr)},
                      {"ks_angle", diag::ks_uniform(ar)},
                      {"acf_band", sacf.band},
                      {"lag_density", {{"lag", ld.lag},
                                       {"bandwidth_x", ld.bandwidth_x},
                                       {"bandwidth_y", ld.bandwidth_y},
                                       {"n_pairs", ld.n_pairs}}},
                      {"states", per_state}};
      write_file(dir / "diagnostics.json", summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
      m.write(dir);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }
  try {
    if (action) action();
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return 0;
}
