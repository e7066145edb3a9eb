#include "one2all/bench.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace one2all {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double worst_case_size(double n, double d, double k, double eps) {
  if (!(n > 0 && d > 0 && k > 0 && eps > 0)) throw StructuralError("worst_case_size needs positive arguments");
  const double base = 3000 * k / (eps * eps);
  const double increase = std::min(std::log(std::max(k, 2.0)) * std::log(n), std::min(n, d / eps));
  return std::min(n, base * increase);
}

RunReport run_cell(const LabeledDataset& data, Index k, double eps, std::uint64_t seed, const BenchConfig& cfg) {
  const auto space = MetricSpace<double>::euclidean(2);
  const auto& X = data.points;
  RunReport rep;
  rep.dataset = data.name;
  rep.n = X.size();
  rep.d = X.dim();
  rep.k = k;
  rep.eps = eps;
  rep.seed = seed;

  WrapperOptions wopt = cfg.wrapper;
  wopt.seed = seed;
  auto t0 = Clock::now();
  const auto result = run_wrapper(space, X, k, eps, lloyd_clusterer<double>(cfg.restarts, cfg.lloydIters), wopt);
  rep.wallSeconds["wrapper"] = seconds_since(t0);

  const auto& wr = result.report;
  rep.sampleSize = static_cast<double>(wr.finalSampleSize);
  rep.adaptiveFraction = static_cast<double>(wr.finalSampleSize) / static_cast<double>(rep.n);
  rep.worstCaseFraction =
      std::min(1.0, worst_case_size(static_cast<double>(rep.n), static_cast<double>(rep.d), static_cast<double>(k), eps) /
                        static_cast<double>(rep.n));
  rep.gain = rep.adaptiveFraction > 0 ? rep.worstCaseFraction / rep.adaptiveFraction : 0;
  rep.sweetSpot = static_cast<double>(wr.sweetSpot);
  rep.rounds = wr.rounds;
  rep.certified = wr.certified;
  rep.overhead = wr.overhead;
  rep.overheadBound = wr.overheadBound;
  rep.breakConditionHolds =
      wr.certified && wr.finalVQ <= (1 + eps) * wr.finalEstimate && wr.finalVQ >= (wr.r > 0 ? wr.vM / wr.r : 0);

  t0 = Clock::now();
  const double V = cost(space, X, result.centroids);
  double sq = 0;
  for (int j = 0; j < cfg.estDraws; ++j) {
    const auto S = CoordinatedSample<double>::draw(X, result.finalProbabilities, derive_seed(seed, 5000 + j));
    const double rel = (V - estimate_cost(space, S, result.centroids)) / V;
    sq += rel * rel;
  }
  rep.estErr = cfg.estDraws > 0 ? std::sqrt(sq / cfg.estDraws) : 0;
  rep.wallSeconds["est_err"] = seconds_since(t0);

  if (data.groundTruthCost && *data.groundTruthCost > 0) {
    rep.costRatioFinal = V / *data.groundTruthCost;
    rep.costRatioSeed = wr.vk / *data.groundTruthCost;
  }
  return rep;
}

RunReport median_report(const std::vector<RunReport>& runs) {
  if (runs.empty()) throw StructuralError("no runs to aggregate");
  RunReport m = runs.front();
  auto field = [&](auto member) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(static_cast<double>(r.*member));
    return median(std::move(v));
  };
  m.adaptiveFraction = field(&RunReport::adaptiveFraction);
  m.worstCaseFraction = field(&RunReport::worstCaseFraction);
  m.gain = field(&RunReport::gain);
  m.estErr = field(&RunReport::estErr);
  m.costRatioFinal = field(&RunReport::costRatioFinal);
  m.costRatioSeed = field(&RunReport::costRatioSeed);
  m.sweetSpot = field(&RunReport::sweetSpot);
  m.sampleSize = field(&RunReport::sampleSize);
  m.rounds = field(&RunReport::rounds);
  m.overhead = field(&RunReport::overhead);
  m.n = static_cast<Index>(field(&RunReport::n));
  m.certified = std::all_of(runs.begin(), runs.end(), [](const RunReport& r) { return r.certified; });
  m.breakConditionHolds =
      std::all_of(runs.begin(), runs.end(), [](const RunReport& r) { return r.breakConditionHolds; });
  m.wallSeconds.clear();
  for (const auto& r : runs)
    for (const auto& [phase, s] : r.wallSeconds) m.wallSeconds[phase] += s / static_cast<double>(runs.size());
  return m;
}

GridResult run_grid(const std::vector<CellSpec>& cells, int reps, std::uint64_t seed, const BenchConfig& cfg) {
  if (reps < 1) throw StructuralError("reps must be >= 1");
  GridResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    std::vector<RunReport> runs;
    try {
      std::optional<LabeledDataset> shared;
      if (cell.source == "idx") {
        shared = load_idx(cell.images, cell.labels.empty() ? std::nullopt
                                                           : std::optional<std::filesystem::path>(cell.labels));
      } else if (cell.source != "gmm") {
        throw StructuralError("unknown dataset source '" + cell.source + "'");
      }
      for (int rep = 0; rep < reps; ++rep) {
        const std::uint64_t s = derive_seed(seed, c * 1000003ULL + static_cast<std::uint64_t>(rep));
        auto t0 = Clock::now();
        std::optional<LabeledDataset> local;
        if (!shared) local = gen_gmm(cell.n, cell.d, cell.k, s);
        const double genSeconds = seconds_since(t0);
        const LabeledDataset& data = shared ? *shared : *local;
        RunReport r = run_cell(data, cell.k, cell.eps, s, cfg);
        r.wallSeconds["generate"] = genSeconds;
        runs.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      out.failures.push_back("cell " + std::to_string(c) + ": " + e.what());
      continue;
    }
    out.medians.push_back(median_report(runs));
    for (auto& r : runs) out.runs.push_back(std::move(r));
  }
  return out;
}

std::vector<CellSpec> preset(const std::string& name) {
  auto gmm = [](Index n, Index d, Index k, double eps) { return CellSpec{"gmm", n, d, k, eps, "", ""}; };
  if (name == "table1-small") return {gmm(50000, 10, 5, 0.1), gmm(50000, 10, 5, 0.2)};
  if (name == "table1") return {gmm(500000, 10, 5, 0.1), gmm(500000, 10, 5, 0.2)};
  if (name == "table1-gmm")
    return {gmm(500000, 10, 5, 0.1),    gmm(500000, 10, 5, 0.2),    gmm(2500000, 10, 5, 0.2),
            gmm(10000000, 10, 5, 0.2),  gmm(2000000, 10, 20, 0.1),  gmm(2000000, 10, 20, 0.2),
            gmm(2000000, 10, 50, 0.2),  gmm(2000000, 10, 100, 0.2), gmm(1000000, 20, 10, 0.1),
            gmm(1000000, 50, 10, 0.1),  gmm(1000000, 100, 10, 0.1)};
  throw StructuralError("unknown preset '" + name + "'");
}

std::string to_jsonl(const RunReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["n"] = r.n;
  j["d"] = r.d;
  j["k"] = r.k;
  j["eps"] = r.eps;
  j["adaptive_fraction"] = r.adaptiveFraction;
  j["worst_case_fraction"] = r.worstCaseFraction;
  j["gain"] = r.gain;
  j["est_err"] = r.estErr;
  j["cost_ratio_final"] = r.costRatioFinal;
  j["cost_ratio_seed"] = r.costRatioSeed;
  j["sweet_spot"] = r.sweetSpot;
  j["sample_size"] = r.sampleSize;
  j["rounds"] = r.rounds;
  j["certified"] = r.certified;
  j["overhead"] = r.overhead;
  j["overhead_bound"] = r.overheadBound;
  j["seed"] = r.seed;
  return j.dump();
}

std::string timing_jsonl(const RunReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["n"] = r.n;
  j["k"] = r.k;
  j["eps"] = r.eps;
  j["seed"] = r.seed;
  j["wall_seconds"] = r.wallSeconds;
  return j.dump();
}

std::string summary_table(const std::vector<RunReport>& reports, char delimiter) {
  std::ostringstream out;
  const char dl = delimiter;
  out << "n" << dl << "d" << dl << "k" << dl << "eps" << dl << "adaptive_fraction" << dl << "worst_case_fraction" << dl
      << "gain" << dl << "est_err" << dl << "cost_ratio_final" << dl << "cost_ratio_seed" << dl << "sweet_spot\n";
  for (const auto& r : reports) {
    out << r.n << dl << r.d << dl << r.k << dl << r.eps << dl << r.adaptiveFraction << dl << r.worstCaseFraction << dl
        << r.gain << dl << r.estErr << dl << r.costRatioFinal << dl << r.costRatioSeed << dl << r.sweetSpot << '\n';
  }
  return out.str();
}

std::vector<CurvePoint> sweet_spot_curve(const LabeledDataset& data, Index ell, int seeds, std::uint64_t seed) {
  if (seeds < 1) throw StructuralError("seeds must be >= 1");
  const auto space = MetricSpace<double>::euclidean(2);
  std::vector<double> sum(static_cast<std::size_t>(ell), 0.0);
  std::vector<int> count(static_cast<std::size_t>(ell), 0);
  for (int s = 0; s < seeds; ++s) {
    const auto trace = run_trace(space, data.points, ell, derive_seed(seed, static_cast<std::uint64_t>(s)));
    // Without ground truth the curve is normalized by the last prefix cost.
    const double ref = data.groundTruthCost && *data.groundTruthCost > 0 ? *data.groundTruthCost
                                                                          : std::max(trace.prefixCosts.back(), 1e-300);
    for (std::size_t i = 0; i < trace.prefixCosts.size(); ++i) {
      sum[i] += trace.prefixCosts[i] / ref;
      ++count[i];
    }
  }
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (count[i] == 0) break;
    const double ratio = sum[i] / count[i];
    out.push_back({static_cast<Index>(i + 1), ratio, ratio * static_cast<double>(i + 1)});
  }
  return out;
}

}  // namespace one2all
