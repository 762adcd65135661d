#include "broadcf/model_io.hpp"

#include "broadcf/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace broadcf {

namespace {

constexpr char kMagic[4] = {'B', 'C', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw_io("cannot open model file for writing: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) { // row-major stream order
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void row_vector(const RowVector& v) {
    for (Eigen::Index c = 0; c < v.size(); ++c) f64(v[c]);
  }
  void string(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint32_t>::max())
      throw_io("id string too long to serialize");
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  bool good() const { return static_cast<bool>(out_); }

private:
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw_io("cannot open model file: " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw_io("corrupt model file (truncated): " + path_);
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    std::uint64_t low = u32();
    std::uint64_t high = u32();
    return low | (high << 32);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void matrix(Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
  }
  void row_vector(RowVector& v, Eigen::Index size) {
    v.resize(size);
    for (Eigen::Index c = 0; c < size; ++c) v[c] = f64();
  }
  std::string string() {
    const std::uint32_t len = u32();
    std::string s(len, '\0');
    if (len > 0) bytes(s.data(), len);
    return s;
  }
  const std::string& path() const { return path_; }

private:
  std::ifstream in_;
  std::string path_;
};

int checked_dim(std::uint32_t v, const char* what, const std::string& path) {
  if (v > (1u << 30)) throw_io(std::string("corrupt model file (absurd ") + what + "): " + path);
  return static_cast<int>(v);
}

} // namespace

void save_model(const std::string& path, const ModelBundle& bundle) {
  const BlsModel<Real>& model = bundle.model;
  const RatingMatrix& train = *bundle.train;

  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);

  w.u32(static_cast<std::uint32_t>(bundle.index->k()));
  w.u32(static_cast<std::uint32_t>(bundle.index->l()));
  w.u32(static_cast<std::uint32_t>(model.hyper.n));
  w.u32(static_cast<std::uint32_t>(model.hyper.d_z));
  w.u32(static_cast<std::uint32_t>(model.hyper.m));
  w.u32(static_cast<std::uint32_t>(model.hyper.d_h));
  w.f64(model.hyper.lambda);
  w.u64(model.hyper.seed);
  w.u32(static_cast<std::uint32_t>(model.input_dim));
  w.u32(static_cast<std::uint32_t>(model.d_y));

  w.matrix(model.W_z);
  w.row_vector(model.beta_z);
  w.matrix(model.W_h);
  w.row_vector(model.beta_h);
  w.u8(model.trained ? 1 : 0);
  w.matrix(model.W);

  w.u32(static_cast<std::uint32_t>(train.num_users()));
  w.u32(static_cast<std::uint32_t>(train.num_items()));
  w.u32(static_cast<std::uint32_t>(train.rating_max()));
  const auto triples = train.triples();
  w.u64(triples.size());
  for (const auto& t : triples) {
    w.u32(static_cast<std::uint32_t>(t.user));
    w.u32(static_cast<std::uint32_t>(t.item));
    w.u8(static_cast<std::uint8_t>(t.rating));
  }

  w.u64(static_cast<std::uint64_t>(bundle.users.size()));
  for (int u = 0; u < bundle.users.size(); ++u) w.string(bundle.users.raw(u));
  w.u64(static_cast<std::uint64_t>(bundle.items.size()));
  for (int i = 0; i < bundle.items.size(); ++i) w.string(bundle.items.raw(i));

  if (!w.good()) throw_io("failed while writing model file: " + path);
}

ModelBundle load_model(const std::string& path, int threads) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw_io("not a model file (bad magic): " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw_io("unsupported model file version " + std::to_string(version) + ": " + path);

  const int k = checked_dim(r.u32(), "k", path);
  const int l = checked_dim(r.u32(), "l", path);
  BlsHyperparams hyper;
  hyper.n = checked_dim(r.u32(), "n", path);
  hyper.d_z = checked_dim(r.u32(), "d_z", path);
  hyper.m = checked_dim(r.u32(), "m", path);
  hyper.d_h = checked_dim(r.u32(), "d_h", path);
  hyper.lambda = r.f64();
  hyper.seed = r.u64();
  const int input_dim = checked_dim(r.u32(), "input_dim", path);
  const int d_y = checked_dim(r.u32(), "d_y", path);

  BlsModel<Real> model;
  model.hyper = hyper;
  model.input_dim = input_dim;
  model.d_y = d_y;
  const Eigen::Index mapped = static_cast<Eigen::Index>(hyper.n) * hyper.d_z;
  const Eigen::Index enhanced = static_cast<Eigen::Index>(hyper.m) * hyper.d_h;
  r.matrix(model.W_z, input_dim, mapped);
  r.row_vector(model.beta_z, mapped);
  r.matrix(model.W_h, mapped, enhanced);
  r.row_vector(model.beta_h, enhanced);
  model.trained = r.u8() != 0;
  r.matrix(model.W, mapped + enhanced, d_y);
  if (!model.W_z.allFinite() || !model.W_h.allFinite() || !model.W.allFinite())
    throw_io("corrupt model file (non-finite weights): " + path);

  const int num_users = checked_dim(r.u32(), "num_users", path);
  const int num_items = checked_dim(r.u32(), "num_items", path);
  const int rating_max = checked_dim(r.u32(), "rating_max", path);
  const std::uint64_t num_entries = r.u64();
  if (num_entries > static_cast<std::uint64_t>(num_users) * static_cast<std::uint64_t>(num_items))
    throw_io("corrupt model file (entry count exceeds matrix size): " + path);
  std::vector<RatingTriple> triples;
  triples.reserve(num_entries);
  for (std::uint64_t e = 0; e < num_entries; ++e) {
    const auto user = static_cast<std::int32_t>(r.u32());
    const auto item = static_cast<std::int32_t>(r.u32());
    const auto rating = static_cast<std::int32_t>(r.u8());
    triples.push_back({user, item, rating});
  }

  IdMap users, items;
  const std::uint64_t n_users = r.u64();
  if (n_users != static_cast<std::uint64_t>(num_users))
    throw_io("corrupt model file (user id map mismatch): " + path);
  for (std::uint64_t u = 0; u < n_users; ++u) users.add_or_get(r.string());
  const std::uint64_t n_items = r.u64();
  if (n_items != static_cast<std::uint64_t>(num_items))
    throw_io("corrupt model file (item id map mismatch): " + path);
  for (std::uint64_t i = 0; i < n_items; ++i) items.add_or_get(r.string());
  if (users.size() != num_users || items.size() != num_items)
    throw_io("corrupt model file (duplicate raw ids): " + path);

  ModelBundle bundle;
  try {
    bundle.train = std::make_shared<RatingMatrix>(num_users, num_items, rating_max,
                                                  std::move(triples));
  } catch (const Error& e) {
    throw_io("corrupt model file (" + std::string(e.what()) + "): " + path);
  }
  bundle.model = std::move(model);
  bundle.index = std::make_shared<NeighborIndex>(
      NeighborIndex::build(bundle.train, k, l, threads));
  bundle.users = std::move(users);
  bundle.items = std::move(items);
  return bundle;
}

} // namespace broadcf
