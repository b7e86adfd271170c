#include "sparke_cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace sparke::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json report_json(const ExperimentConfig& cfg, const RunRecord& record, const EvalReport& r) {
  json per_sample = json::array();
  for (const auto& s : record.samples) {
    json norms = json::array();
    for (const auto& e : s.events) norms.push_back(e.loss_gradient.norm());
    per_sample.push_back({{"index", s.index}, {"prompt_id", s.prompt_index}, {"wall_seconds", s.wall_seconds},
                          {"guidance_gradient_norms", norms}});
  }
  return {{"schema_version", kSchemaVersion},
          {"sample_count", record.samples.size()},
          {"vendi", r.vendi},
          {"rke", r.rke},
          {"cond_vendi", r.cond_vendi},
          {"cond_rke", r.cond_rke},
          {"in_batch_similarity", optional_json(r.in_batch_similarity)},
          {"mode_coverage", r.mode_coverage},
          {"high_quality_fraction", r.high_quality_fraction},
          {"radius_mult", cfg.radius_mult},
          {"wall_seconds", record.wall_seconds},
          {"samples", per_sample}};
}

json history_json(const RunRecord& record) {
  json entries = json::array();
  const auto latents = record.history.latents();
  const auto conds = record.history.conditions();
  for (std::size_t i = 0; i < latents.size(); ++i) {
    entries.push_back({{"latent", vector_json(latents[i])}, {"condition", vector_json(conds[i])}});
  }
  return {{"schema_version", kSchemaVersion},
          {"reference_count", record.history.reference_count()},
          {"entries", entries}};
}

EvalReport evaluate(const ExperimentConfig& cfg, const RunRecord& record) {
  return evaluate_run(record, {cfg.run.guidance.kernel_z, cfg.run.guidance.kernel_y, cfg.radius_mult});
}

struct SweepPoint {
  ExperimentConfig cfg;
  json values;
};

std::vector<SweepPoint> expand(const ExperimentConfig& base) {
  const auto& ax = base.sweep;
  const auto& g = base.run.guidance;
  const std::vector<double> etas = ax.eta.empty() ? std::vector<double>{g.eta} : ax.eta;
  const std::vector<double> ws = ax.cfg_scale.empty() ? std::vector<double>{base.run.cfg_scale} : ax.cfg_scale;
  const std::vector<KernelKind> kernels = ax.kernel.empty() ? std::vector<KernelKind>{g.kernel_z.kind} : ax.kernel;
  const std::vector<GuidanceMode> modes = ax.mode.empty() ? std::vector<GuidanceMode>{g.mode} : ax.mode;
  std::vector<SweepPoint> points;
  for (const double eta : etas) {
    for (const double w : ws) {
      for (const auto kernel : kernels) {
        for (const auto mode : modes) {
          SweepPoint p{base, {}};
          p.cfg.sweep = {};
          p.cfg.run.guidance.eta = eta;
          p.cfg.run.cfg_scale = w;
          p.cfg.run.guidance.kernel_z.kind = kernel;
          p.cfg.run.guidance.mode = mode;
          try {
            p.cfg.run.validate();
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("sweep point: ") + e.what());
          }
          p.values = {{"eta", eta}, {"cfg_scale", w}, {"kernel", std::string(to_string(kernel))},
                      {"mode", std::string(to_string(mode))}};
          points.push_back(std::move(p));
        }
      }
    }
  }
  return points;
}

void run_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path root(cfg.output_dir);
  make_dir(root);
  write_file(root / "config.json", to_json(cfg).dump(2) + "\n");
  std::ostringstream csv;
  csv << "point,eta,cfg_scale,kernel,mode,vendi,rke,cond_vendi,cond_rke,in_batch_similarity,mode_coverage,"
         "high_quality_fraction\n";
  const auto points = expand(cfg);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu", i);
    const auto record = run_experiment(p.cfg.run);
    const auto report = evaluate(p.cfg, record);
    write_run_outputs(root / name, p.cfg, record, report);
    csv << i << ',' << fmt17(p.cfg.run.guidance.eta) << ',' << fmt17(p.cfg.run.cfg_scale) << ','
        << to_string(p.cfg.run.guidance.kernel_z.kind) << ',' << to_string(p.cfg.run.guidance.mode) << ','
        << fmt17(report.vendi) << ',' << fmt17(report.rke) << ',' << fmt17(report.cond_vendi) << ','
        << fmt17(report.cond_rke) << ','
        << (report.in_batch_similarity ? fmt17(*report.in_batch_similarity) : std::string()) << ','
        << fmt17(report.mode_coverage) << ',' << fmt17(report.high_quality_fraction) << '\n';
    log << json{{"point", i}, {"dir", (root / name).string()}, {"values", p.values}, {"rke", report.rke}}.dump()
        << '\n';
  }
  write_file(root / "sweep.csv", csv.str());
}

}  // namespace

std::string samples_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "index,prompt_id";
  const Eigen::Index d = record.samples.empty() ? 0 : record.samples.front().latent.size();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (d == 2) {
      out << (j == 0 ? ",x" : ",y");
    } else {
      out << ",x" << j;
    }
  }
  out << '\n';
  for (const auto& s : record.samples) {
    out << s.index << ',' << s.prompt_index;
    for (Eigen::Index j = 0; j < s.latent.size(); ++j) out << ',' << fmt17(s.latent[j]);
    out << '\n';
  }
  return out.str();
}

void write_run_outputs(const fs::path& dir, const ExperimentConfig& cfg, const RunRecord& record,
                       const EvalReport& report) {
  make_dir(dir);
  write_file(dir / "samples.csv", samples_csv(record));
  write_file(dir / "report.json", report_json(cfg, record, report).dump(2) + "\n");
  write_file(dir / "history.json", history_json(record).dump() + "\n");
  write_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
}

void cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.sweep.empty()) {
    run_sweep(cfg, log);
    return;
  }
  const auto record = run_experiment(cfg.run);
  const auto report = evaluate(cfg, record);
  write_run_outputs(cfg.output_dir, cfg, record, report);
  log << json{{"dir", cfg.output_dir}, {"samples", record.samples.size()}, {"rke", report.rke},
              {"vendi", report.vendi}}
             .dump()
      << '\n';
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.sweep.empty()) throw ConfigError("sweep: no sweep axes declared (eta, cfg_scale, kernel, mode)");
  run_sweep(cfg, log);
}

void cmd_bench(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path root(cfg.output_dir);
  make_dir(root);
  json results = json::array();
  std::ostringstream csv;
  csv << "method,n,wall_seconds,fitted_exponent\n";
  for (const auto method : cfg.bench.methods) {
    bench::BenchResult r;
    try {
      r = bench::bench_method(method, cfg.bench.sizes_for(method), cfg.bench.options);
    } catch (const bench::CapExceeded& e) {
      log << json{{"warning", e.what()}, {"method", std::string(bench::to_string(method))}, {"skipped", true}}.dump()
          << '\n';
      continue;
    }
    results.push_back({{"method", std::string(bench::to_string(method))},
                       {"sizes", r.sizes},
                       {"wall_times", r.wall_times},
                       {"fitted_exponent", r.fitted_exponent},
                       {"peak_alloc", r.peak_alloc},
                       {"trials", r.trials},
                       {"threads", r.threads},
                       {"dim", r.dim},
                       {"seed", r.seed}});
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      csv << bench::to_string(method) << ',' << r.sizes[i] << ',' << fmt17(r.wall_times[i]) << ','
          << fmt17(r.fitted_exponent) << '\n';
    }
    log << json{{"method", std::string(bench::to_string(method))}, {"fitted_exponent", r.fitted_exponent}}.dump()
        << '\n';
  }

  json pipeline = json::array();
  if (cfg.bench.pipeline_history > 0) {
    GuidanceConfig off = cfg.run.guidance, zero = cfg.run.guidance, rke = cfg.run.guidance,
                   sparke = cfg.run.guidance;
    off.mode = GuidanceMode::off;
    zero.mode = GuidanceMode::conditional_rke;
    zero.eta = 0.0;
    rke.mode = GuidanceMode::unconditional_rke;
    sparke.mode = GuidanceMode::conditional_rke;
    const auto rows = bench::bench_pipeline_overhead(
        cfg.run, {{"off", off}, {"eta0", zero}, {"rke", rke}, {"sparke", sparke}}, cfg.bench.pipeline_history,
        cfg.bench.pipeline_samples);
    for (const auto& row : rows) {
      pipeline.push_back({{"label", row.label},
                          {"seconds_per_sample", row.seconds_per_sample},
                          {"relative_overhead", row.relative_overhead}});
      csv << "pipeline_" << row.label << ',' << cfg.bench.pipeline_history << ',' << fmt17(row.seconds_per_sample)
          << ",\n";
    }
  }
  write_file(root / "bench.json", json{{"schema_version", kSchemaVersion},
                                       {"results", results},
                                       {"pipeline", pipeline},
                                       {"pipeline_history", cfg.bench.pipeline_history}}
                                          .dump(2) +
                                      "\n");
  write_file(root / "bench.csv", csv.str());
}

std::vector<Vector> read_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::vector<Vector> rows;
  if (fs::path(path).extension() == ".json") {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError(path + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) throw InputError(path + ": expected an array of arrays");
    for (const auto& row : doc) {
      if (!row.is_array() || row.empty()) throw InputError(path + ": every row must be a nonempty array");
      Vector v(static_cast<Eigen::Index>(row.size()));
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (!row[j].is_number()) throw InputError(path + ": non-numeric entry");
        v[static_cast<Eigen::Index>(j)] = row[j].get<double>();
      }
      rows.push_back(std::move(v));
    }
  } else {
    std::string line;
    std::vector<bool> keep;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (first) {
        first = false;
        keep.assign(cells.size(), true);
        bool header = false;
        for (std::size_t j = 0; j < cells.size(); ++j) {
          char* end = nullptr;
          std::strtod(cells[j].c_str(), &end);
          if (cells[j].empty() || *end != '\0') header = true;
          if (cells[j] == "index" || cells[j] == "prompt_id") keep[j] = false;
        }
        if (header) continue;
        keep.assign(cells.size(), true);
      }
      if (cells.size() != keep.size()) {
        throw InputError(path + ":" + std::to_string(line_no) + ": ragged row (" + std::to_string(cells.size()) +
                         " columns, expected " + std::to_string(keep.size()) + ")");
      }
      std::vector<double> values;
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (!keep[j]) continue;
        char* end = nullptr;
        const double v = std::strtod(cells[j].c_str(), &end);
        if (cells[j].empty() || *end != '\0') {
          throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + cells[j] + "'");
        }
        values.push_back(v);
      }
      if (values.empty()) throw InputError(path + ":" + std::to_string(line_no) + ": no coordinates");
      rows.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
  }
  if (rows.empty()) throw InputError(path + ": no rows");
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw InputError(path + ": ragged rows");
  }
  return rows;
}

void cmd_score(const ScoreOptions& opt, std::ostream& out) {
  try {
    opt.kernel_z.validate();
    opt.kernel_y.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto z = read_vectors(opt.vectors_path);
  // Kernel errors here come from the data (e.g. a zero row under cosine).
  const auto scored = [](auto&& f) {
    try {
      return f();
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  };
  const auto kz = scored([&] { return build_kernel_matrix(opt.kernel_z, z); });
  json result = {{"n", z.size()}, {"vendi", vendi_score(kz).value}, {"rke", rke_score(kz).value}};
  if (opt.conditions_path) {
    const auto y = read_vectors(*opt.conditions_path);
    if (y.size() != z.size()) {
      throw InputError("conditions have " + std::to_string(y.size()) + " rows, vectors have " +
                       std::to_string(z.size()));
    }
    const auto ky = scored([&] { return build_kernel_matrix(opt.kernel_y, y); });
    result["cond_vendi"] = cond_vendi_score(kz, ky).value;
    result["cond_rke"] = cond_rke_score(kz, ky).value;
  }
  out << result.dump() << '\n';
}

int guarded(std::ostream& err, const std::function<void()>& body) {
  auto report = [&](const char* kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
  };
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    report("config", e.what());
    return kConfigError;
  } catch (const InputError& e) {
    report("input", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    report("runtime", e.what());
    return kRuntimeError;
  }
}

}  // namespace sparke::cli
