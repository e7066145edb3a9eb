#include "one2all/oracle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace one2all {

static_assert(std::endian::native == std::endian::little, "oracle files are little-endian");

namespace {

constexpr char kMagic[8] = {'O', '2', 'A', 'O', 'R', 'C', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void put_doubles(const double* p, std::size_t count) {
    bytes_.append(reinterpret_cast<const char*>(p), count * sizeof(double));
  }
  void put_raw(const char* p, std::size_t count) { bytes_.append(p, count); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_doubles(double* p, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(p, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }
  void get_raw(char* p, std::size_t count) {
    need(count);
    std::memcpy(p, bytes_.data() + pos_, count);
    pos_ += count;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t count) const {
    if (pos_ + count > bytes_.size()) throw FormatError("truncated oracle file");
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_oracle(const OracleState<double>& state, const MetricSpace<double>& space,
                 const std::filesystem::path& path) {
  if (space.kind() != MetricKind::EuclideanPower) throw UnsupportedOperation("only Euclidean oracles are serialized");
  const auto& S = state.sample;
  const auto n = static_cast<std::uint64_t>(state.p.size());
  const auto d = static_cast<std::uint64_t>(S.points().rows());
  const auto mcount = static_cast<std::uint64_t>(state.probs.centroids.cols());
  const auto m = static_cast<std::uint64_t>(S.size());

  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(space.kind()));
  w.put(space.power());
  w.put(space.rho());
  w.put(n);
  w.put(d);
  w.put(static_cast<std::uint64_t>(state.k));
  w.put(static_cast<std::uint64_t>(state.prefixIndex));
  w.put(static_cast<std::uint64_t>(state.updateCount));
  w.put(static_cast<std::uint64_t>(state.seed));
  w.put(state.eps);
  w.put(state.C);
  w.put(state.probs.costM);
  w.put(mcount);
  w.put_doubles(state.probs.centroids.data(), static_cast<std::size_t>(d * mcount));
  w.put_doubles(state.probs.pi.data(), static_cast<std::size_t>(n));
  w.put_doubles(state.p.data(), static_cast<std::size_t>(n));
  w.put(m);
  for (Index x : S.members()) w.put(static_cast<std::uint64_t>(x));
  w.put_doubles(S.points().data(), static_cast<std::size_t>(d * m));
  w.put_doubles(S.weights().data(), static_cast<std::size_t>(m));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedOracle load_oracle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  char magic[8];
  r.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not an oracle file");
  if (r.get<std::uint32_t>() != kVersion) throw FormatError("unsupported oracle file version");
  const auto kind = static_cast<MetricKind>(r.get<std::uint32_t>());
  if (kind != MetricKind::EuclideanPower) throw FormatError("unsupported metric kind in oracle file");
  const double power = r.get<double>();
  const double rho = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  const auto d = r.get<std::uint64_t>();
  const auto k = r.get<std::uint64_t>();
  const auto prefix = r.get<std::uint64_t>();
  const auto updates = r.get<std::uint64_t>();
  const auto seed = r.get<std::uint64_t>();
  const double eps = r.get<double>();
  const double C = r.get<double>();
  const double costM = r.get<double>();
  const auto mcount = r.get<std::uint64_t>();
  if (n == 0 || d == 0 || d > (1u << 24) || n > (1ull << 40)) throw FormatError("implausible oracle dimensions");

  One2AllProbabilities<double> probs;
  probs.rho = rho;
  probs.costM = costM;
  probs.centroids.resize(static_cast<Index>(d), static_cast<Index>(mcount));
  r.get_doubles(probs.centroids.data(), static_cast<std::size_t>(d * mcount));
  probs.pi.resize(static_cast<Index>(n));
  r.get_doubles(probs.pi.data(), static_cast<std::size_t>(n));
  Vector<double> p(static_cast<Index>(n));
  r.get_doubles(p.data(), static_cast<std::size_t>(n));

  const auto m = r.get<std::uint64_t>();
  if (m > n) throw FormatError("more sample members than points");
  std::vector<Index> members(static_cast<std::size_t>(m));
  for (auto& x : members) {
    x = static_cast<Index>(r.get<std::uint64_t>());
    if (x < 0 || static_cast<std::uint64_t>(x) >= n) throw FormatError("sample member out of range");
  }
  Matrix<double> pts(static_cast<Index>(d), static_cast<Index>(m));
  r.get_doubles(pts.data(), static_cast<std::size_t>(d * m));
  Vector<double> w(static_cast<Index>(m));
  r.get_doubles(w.data(), static_cast<std::size_t>(m));
  if (!r.done()) throw FormatError("trailing bytes in oracle file");

  // Rebuild the sample over a population whose non-members are placeholders;
  // membership must agree with the seeded randomization.
  const std::uint64_t sampleSeed = derive_seed(seed, 0x0a11ULL);
  Matrix<double> fullPts = Matrix<double>::Zero(static_cast<Index>(d), static_cast<Index>(n));
  Vector<double> fullW = Vector<double>::Ones(static_cast<Index>(n));
  for (std::size_t j = 0; j < members.size(); ++j) {
    fullPts.col(members[j]) = pts.col(static_cast<Index>(j));
    fullW(members[j]) = w(static_cast<Index>(j));
  }
  auto sample = CoordinatedSample<double>::draw(WeightedPointSet<double>(std::move(fullPts), std::move(fullW)), p, sampleSeed);
  if (sample.members() != members) throw FormatError("sample membership disagrees with the stored seed");

  OracleState<double> state{std::move(sample), std::move(probs), std::move(p), C, eps, static_cast<Index>(k),
                            static_cast<Index>(prefix), static_cast<Index>(updates), seed, {}};
  return LoadedOracle{std::move(state), kind, power};
}

}  // namespace one2all
