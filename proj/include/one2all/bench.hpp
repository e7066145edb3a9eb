#pragma once

#include "one2all/data.hpp"
#include "one2all/wrapper.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace one2all {

/// Underestimate of worst-case coreset size:
///   min{n, 3000 k eps^-2 min{ln(max(k,2)) ln n, min(n, d/eps)}}, natural logs.
double worst_case_size(double n, double d, double k, double eps);

/// One experiment record, columns of the adaptive-vs-worst-case table.
struct RunReport {
  std::string dataset;
  Index n = 0, d = 0, k = 0;
  double eps = 0;
  double adaptiveFraction = 0;   // |S| / n of the final sample
  double worstCaseFraction = 0;  // min{1, worst_case_size / n}
  double gain = 0;               // worstCaseFraction / adaptiveFraction
  double estErr = 0;             // RMS relative error of the final Q over fresh samples
  double costRatioFinal = 0;     // V(Q | X) / V_ground-truth
  double costRatioSeed = 0;      // V({m_1..m_k} | X) / V_ground-truth
  double sweetSpot = 0;
  double sampleSize = 0;
  double rounds = 0;
  bool certified = false;
  bool breakConditionHolds = false;
  double overhead = 0;
  double overheadBound = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> wallSeconds;  // kept out of the primary report stream
};

struct BenchConfig {
  int restarts = 5;
  int lloydIters = 20;
  int estDraws = 30;
  WrapperOptions wrapper;
};

/// Runs the wrapper with the default base clusterer on `data` and measures
/// everything in RunReport. Ratios to ground truth are 0 when it is absent.
RunReport run_cell(const LabeledDataset& data, Index k, double eps, std::uint64_t seed, const BenchConfig& cfg = {});

struct CellSpec {
  std::string source = "gmm";  // "gmm" or "idx"
  Index n = 0, d = 0, k = 0;
  double eps = 0.1;
  std::string images;  // idx only
  std::string labels;  // idx only, optional
};

struct GridResult {
  std::vector<RunReport> runs;     // every repetition, in cell order
  std::vector<RunReport> medians;  // one per completed cell
  std::vector<std::string> failures;
};

/// Every cell `reps` times; gmm cells draw a fresh dataset per repetition.
/// Per-cell failures are recorded and the grid continues.
GridResult run_grid(const std::vector<CellSpec>& cells, int reps, std::uint64_t seed, const BenchConfig& cfg = {});

/// Named grids: "table1-small", "table1", "table1-gmm".
std::vector<CellSpec> preset(const std::string& name);

/// Field-wise median of repeated runs of one cell.
RunReport median_report(const std::vector<RunReport>& runs);

std::string to_jsonl(const RunReport& report);
std::string timing_jsonl(const RunReport& report);
std::string summary_table(const std::vector<RunReport>& reports, char delimiter = ',');

/// Per-prefix kmeans++ cost curve averaged over seeds: (i, v_i / V_gt, i v_i / V_gt).
struct CurvePoint {
  Index i = 0;
  double costRatio = 0;
  double overhead = 0;
};

std::vector<CurvePoint> sweet_spot_curve(const LabeledDataset& data, Index ell, int seeds, std::uint64_t seed);

}  // namespace one2all
