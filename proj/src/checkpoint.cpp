#include "thrnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "thrnn/config.hpp"
#include "thrnn/error.hpp"

namespace thrnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'H', 'R', 'N', 'N', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("checkpoint is truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ull << 32)) throw FormatError("checkpoint string length is implausible");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint is truncated");
  return s;
}

void put_array(std::ostream& out, const Array2& a) {
  put<std::uint64_t>(out, a.rows());
  put<std::uint64_t>(out, a.cols());
  out.write(reinterpret_cast<const char*>(a.data().data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
}

Array2 get_array(std::istream& in) {
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (rows * cols > (1ull << 32)) throw FormatError("checkpoint array size is implausible");
  Array2 a(rows, cols);
  if (!in.read(reinterpret_cast<char*>(a.data().data()), static_cast<std::streamsize>(a.size() * sizeof(double))))
    throw FormatError("checkpoint is truncated");
  return a;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model, const TrainConfig& training, std::size_t epochs_done,
                      const Adam* optimizer) {
  nlohmann::json meta{{"model", to_json(model.config)},
                      {"bucketizer", to_json(model.bucketizer)},
                      {"quadrature", to_json(model.quadrature)},
                      {"training", to_json(training)},
                      {"epochs_done", epochs_done},
                      {"item_ids", model.item_ids},
                      {"user_ids", model.user_ids}};
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, meta.dump());

  const auto params = model.params.all();
  put<std::uint64_t>(out, params.size());
  for (const Parameter* p : params) {
    put_string(out, p->name);
    put_array(out, p->value);
  }

  put<std::uint8_t>(out, optimizer ? 1 : 0);
  if (optimizer) {
    put<std::int64_t>(out, optimizer->steps());
    put<std::uint64_t>(out, optimizer->moments().size());
    for (const auto& [name, m] : optimizer->moments()) {
      put_string(out, name);
      put_array(out, m.first);
      put_array(out, m.second);
    }
  }
  if (!out) throw Error("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw FormatError("not a checkpoint file (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(get_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }

  Checkpoint c;
  try {
    c.model.config = model_config_from_json(meta.at("model"));
    c.model.bucketizer = bucketizer_from_json(meta.at("bucketizer"));
    c.model.quadrature = quadrature_from_json(meta.at("quadrature"));
    c.training = train_config_from_json(meta.at("training"));
    c.epochs_done = meta.at("epochs_done").get<std::size_t>();
    c.model.item_ids = meta.at("item_ids").get<std::vector<std::string>>();
    c.model.user_ids = meta.at("user_ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is incomplete: ") + e.what());
  }
  c.model.config.validate();
  if (c.model.item_ids.size() != c.model.config.num_items || c.model.user_ids.size() != c.model.config.num_users)
    throw FormatError("checkpoint vocabularies do not match the model configuration");

  c.model.params = ModelParams::initialize(c.model.config, 0);
  auto params = c.model.params.all();
  const auto count = get<std::uint64_t>(in);
  if (count != params.size()) throw FormatError("checkpoint holds " + std::to_string(count) + " arrays, expected " +
                                                std::to_string(params.size()));
  for (Parameter* p : params) {
    const std::string name = get_string(in);
    if (name != p->name) throw FormatError("checkpoint array '" + name + "' found where '" + p->name + "' was expected");
    Array2 a = get_array(in);
    if (a.rows() != p->value.rows() || a.cols() != p->value.cols())
      throw FormatError("checkpoint array '" + name + "' has the wrong shape");
    p->value = std::move(a);
  }

  if (get<std::uint8_t>(in)) {
    const auto steps = get<std::int64_t>(in);
    const auto n = get<std::uint64_t>(in);
    std::map<std::string, AdamMoments> moments;
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string name = get_string(in);
      AdamMoments m;
      m.first = get_array(in);
      m.second = get_array(in);
      moments.emplace(std::move(name), std::move(m));
    }
    Adam adam;
    adam.restore(steps, std::move(moments));
    c.optimizer = std::move(adam);
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainConfig& training,
                     std::size_t epochs_done, const Adam* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, model, training, epochs_done, optimizer);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace thrnn
