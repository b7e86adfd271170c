#include "sparke/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>

#include <Eigen/SVD>

#include "sparke/entropy.hpp"

namespace sparke::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void require_close(double got, double want, double rel, const char* what) {
  if (!(std::abs(got - want) <= rel * std::max(1.0, std::abs(want)))) {
    throw std::runtime_error(std::string("bench: ") + what + " disagrees with its reference");
  }
}

void require_close(const Vector& got, const Vector& want, double rel, const char* what) {
  const double scale = std::max(want.norm(), 1e-300);
  if (!((got - want).norm() <= rel * scale)) {
    throw std::runtime_error(std::string("bench: ") + what + " disagrees with its reference");
  }
}

// Direct O(n) evaluation through the generic kernel routines; independent of
// the fused loop used by the guidance module.
Vector reference_gradient(std::span<const LatentPoint> history, const LatentPoint& z,
                          const Vector* weights, const KernelSpec& spec, double scale) {
  Vector acc = Vector::Zero(z.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double w = weights ? (*weights)[static_cast<Eigen::Index>(i)] : 1.0;
    acc += w * eval_kernel(spec, history[i], z) * eval_kernel_grad(spec, history[i], z);
  }
  return scale * acc;
}

double svd_vendi(const KernelMatrix& k) {
  Eigen::JacobiSVD<Matrix> svd(k.entries() / k.trace());
  double h = 0.0;
  for (const double s : svd.singularValues()) {
    if (s > 0.0) h -= s * std::log(s);
  }
  return std::exp(h);
}

struct Prepared {
  std::function<double()> call;  // returns a value folded into a sink
  std::size_t bytes = 0;
};

Prepared prepare(Method method, std::size_t n, const BenchOptions& opt) {
  const KernelSpec spec = KernelSpec::gaussian(opt.bandwidth);
  const std::size_t d = opt.dim;
  switch (method) {
    case Method::vendi_eigen: {
      auto kernel = std::make_shared<KernelMatrix>(build_kernel_matrix(spec, make_points(n, d, opt.seed)));
      if (n <= 128) require_close(vendi_score(*kernel).value, svd_vendi(*kernel), 1e-9, "vendi_eigen");
      return {[kernel] { return vendi_score(*kernel).value; }, 2 * n * n * sizeof(double) + n * d * sizeof(double)};
    }
    case Method::rke_frobenius: {
      auto points = std::make_shared<std::vector<LatentPoint>>(make_points(n, d, opt.seed));
      auto rke = [points, spec] {
        const double nn = static_cast<double>(points->size());
        return nn * nn / kernel_frobenius_sq(spec, *points);
      };
      if (n <= 1024) require_close(rke(), rke_score(build_kernel_matrix(spec, *points)).value, 1e-10, "rke_frobenius");
      return {rke, n * d * sizeof(double)};
    }
    case Method::irke_gradient:
    case Method::cond_irke_gradient: {
      const bool conditional = method == Method::cond_irke_gradient;
      auto points = make_points(n + 1, d, opt.seed);
      auto conds = make_points(n + 1, 2, opt.seed ^ 0x5bd1e995ULL);
      auto history = std::make_shared<GenerationHistory>();
      for (std::size_t i = 0; i < n; ++i) history->push(points[i], conds[i]);
      auto cfg = std::make_shared<GuidanceConfig>();
      cfg->kernel_z = spec;
      cfg->kernel_y = KernelSpec::gaussian(opt.bandwidth);
      auto z = std::make_shared<LatentPoint>(points[n]);
      auto y = std::make_shared<ConditionVector>(conds[n]);
      const double nn = static_cast<double>(n + 1);
      if (conditional) {
        const Vector w = condition_weights(*history, *y, cfg->kernel_y);
        require_close(cond_irke_gradient(*history, *z, *y, *cfg).value,
                      reference_gradient(history->latents(), *z, &w, spec, 4.0 / (nn * nn * nn * nn)),
                      1e-10, "cond_irke_gradient");
        return {[history, z, y, cfg] { return cond_irke_gradient(*history, *z, *y, *cfg).value[0]; },
                n * (d + 2) * sizeof(double)};
      }
      require_close(irke_gradient(*history, *z, *cfg).value,
                    reference_gradient(history->latents(), *z, nullptr, spec, 4.0 / (nn * nn)), 1e-10,
                    "irke_gradient");
      return {[history, z, cfg] { return irke_gradient(*history, *z, *cfg).value[0]; },
              n * (d + 2) * sizeof(double)};
    }
  }
  throw std::logic_error("unreachable bench method");
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::vendi_eigen:
      return "vendi_eigen";
    case Method::rke_frobenius:
      return "rke_frobenius";
    case Method::irke_gradient:
      return "irke_gradient";
    case Method::cond_irke_gradient:
      return "cond_irke_gradient";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const Method m : {Method::vendi_eigen, Method::rke_frobenius, Method::irke_gradient,
                         Method::cond_irke_gradient}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown bench method '" + std::string(name) + "'");
}

double fit_loglog_slope(const std::vector<std::size_t>& sizes, const std::vector<double>& times) {
  if (sizes.size() != times.size() || sizes.size() < 2) {
    throw std::invalid_argument("fit_loglog_slope: need >= 2 matched points");
  }
  const std::size_t first = std::min(sizes.size() / 2, sizes.size() - 2);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double count = 0.0;
  for (std::size_t i = first; i < sizes.size(); ++i) {
    const double x = std::log(static_cast<double>(sizes[i]));
    const double y = std::log(times[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1.0;
  }
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

std::vector<LatentPoint> make_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed, n);
  std::vector<LatentPoint> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) points.push_back(rng.normal_vector(static_cast<Eigen::Index>(dim)));
  return points;
}

BenchResult bench_method(Method method, const std::vector<std::size_t>& sizes,
                         const BenchOptions& options) {
  if (sizes.empty()) throw std::invalid_argument("bench: no sizes");
  if (options.trials < 3) throw std::invalid_argument("bench: trials must be >= 3");
  if (options.dim == 0) throw std::invalid_argument("bench: dim must be >= 1");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw std::invalid_argument("bench: sizes must strictly increase");
  }
  if (sizes.front() < 1) throw std::invalid_argument("bench: sizes must be positive");
  if (method == Method::vendi_eigen && sizes.back() > options.eigen_cap) {
    throw CapExceeded("bench: vendi_eigen size " + std::to_string(sizes.back()) +
                      " exceeds eigen cap " + std::to_string(options.eigen_cap));
  }

  BenchResult result;
  result.method = method;
  result.sizes = sizes;
  result.trials = options.trials;
  result.dim = options.dim;
  result.seed = options.seed;
  volatile double sink = 0.0;

  std::vector<Prepared> prepared;
  std::vector<int> reps;
  for (const std::size_t n : sizes) {
    prepared.push_back(prepare(method, n, options));
    result.peak_alloc = std::max(result.peak_alloc, prepared.back().bytes);

    // Untimed warm-up, also used to size the repetition count.
    const auto start = Clock::now();
    sink = sink + prepared.back().call();
    const double warm = std::max(seconds_since(start), 1e-9);
    reps.push_back(static_cast<int>(std::clamp(std::ceil(options.min_trial_seconds / warm), 1.0, 1e6)));
  }

  // Trials visit the sizes round-robin so a transient slowdown does not land
  // on a single size and bend the fitted slope.
  std::vector<std::vector<double>> trial_times(sizes.size());
  for (int trial = 0; trial < options.trials; ++trial) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const auto start = Clock::now();
      for (int r = 0; r < reps[i]; ++r) sink = sink + prepared[i].call();
      trial_times[i].push_back(seconds_since(start) / reps[i]);
    }
  }
  for (auto& times : trial_times) result.wall_times.push_back(median(std::move(times)));
  result.fitted_exponent = sizes.size() >= 2 ? fit_loglog_slope(result.sizes, result.wall_times) : 0.0;
  return result;
}

std::vector<OverheadRow> bench_pipeline_overhead(const RunConfig& base,
                                                 const std::vector<PipelineVariant>& variants,
                                                 std::size_t history_size, int samples) {
  base.validate();
  if (variants.empty()) throw std::invalid_argument("bench: no pipeline variants");
  if (samples < 1) throw std::invalid_argument("bench: samples must be >= 1");

  const auto& gmm = base.gmm;
  const std::size_t m = gmm.components().size();
  std::vector<LatentPoint> points;
  std::vector<ConditionVector> conds;
  for (std::size_t i = 0; i < history_size; ++i) {
    const std::size_t comp = i % m;
    RngStream rng(base.seed ^ 0x9e3779b97f4a7c15ULL, i);
    points.push_back(gmm.sample_component(comp, rng));
    const auto c = gmm.condition_of(comp);
    conds.push_back(c ? gmm.conditions()[*c].vector : base.prompts.front());
  }

  std::vector<RunConfig> configs;
  std::vector<GenerationHistory> histories;
  for (const auto& variant : variants) {
    RunConfig cfg = base;
    cfg.guidance = variant.guidance;
    cfg.validate();
    GenerationHistory history(variant.guidance.window);
    for (std::size_t i = 0; i < points.size(); ++i) history.push(points[i], conds[i]);
    RngStream warm(cfg.seed, static_cast<std::uint64_t>(samples));
    (void)generate_one(history, cfg.prompts.front(), cfg, warm);
    configs.push_back(std::move(cfg));
    histories.push_back(std::move(history));
  }

  // Variants are timed round-robin so slow drift in machine load hits all of them alike.
  std::vector<std::vector<double>> times(variants.size());
  for (int s = 0; s < samples; ++s) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto& cfg = configs[v];
      const auto& y = cfg.prompts[static_cast<std::size_t>(s) % cfg.prompts.size()];
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(s));
      const auto start = Clock::now();
      const auto result = generate_one(histories[v], y, cfg, rng);
      times[v].push_back(seconds_since(start));
      if (!result.latent.allFinite()) throw std::runtime_error("bench: non-finite sample");
    }
  }
  std::vector<OverheadRow> rows;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    rows.push_back({variants[v].label, median(std::move(times[v])), 0.0});
  }
  const double baseline = rows.front().seconds_per_sample;
  for (auto& row : rows) row.relative_overhead = row.seconds_per_sample / baseline - 1.0;
  return rows;
}

}  // namespace sparke::bench
