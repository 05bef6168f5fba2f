#include "lcr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lcr/errors.hpp"
#include "lcr/text.hpp"

namespace lcr {

namespace {

constexpr char kMagic[8] = {'L', 'C', 'R', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : b_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = b_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw ParseError("checkpoint is truncated");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json config_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["d"] = c.d;
  j["encoder_heads"] = c.encoder_heads;
  j["decoder_heads"] = c.decoder_heads;
  j["decoder_layers"] = c.decoder_layers;
  j["ff_dim"] = c.ff_dim;
  j["context"] = c.context;
  j["dropout"] = c.dropout;
  j["auto_register_charges"] = c.auto_register_charges;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.at("d").get<int>();
  c.encoder_heads = j.at("encoder_heads").get<int>();
  c.decoder_heads = j.at("decoder_heads").get<int>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.context = j.at("context").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.auto_register_charges = j.at("auto_register_charges").get<bool>();
  return c;
}

}  // namespace

std::string encode_checkpoint(const OpinionModel& model, const CheckpointInfo& info) {
  nlohmann::ordered_json header;
  header["config"] = config_json(model.config());
  header["vocabulary"] = model.vocab().tokens();
  header["charges"] = registered_charges(model.params());
  header["use_chains"] = info.use_chains;
  header["seed"] = info.seed;
  header["epoch"] = info.epoch;
  const std::string h = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointMajor);
  put<std::uint32_t>(out, kCheckpointMinor);
  put<std::uint64_t>(out, h.size());
  out += h;
  put<std::uint64_t>(out, model.params().size());
  for (const auto& [name, m] : model.params()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m.data()[i]));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw ParseError("not a checkpoint file (bad magic)");
  const auto major = r.get<std::uint32_t>();
  r.get<std::uint32_t>();  // minor versions are forward compatible
  if (major != kCheckpointMajor)
    throw ParseError("unsupported checkpoint version " + std::to_string(major));
  const auto header_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    const auto h = r.bytes(header_len);
    header = nlohmann::json::parse(h.begin(), h.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }

  ParamStore params;
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto name_len = r.get<std::uint32_t>();
    const std::string name(r.bytes(name_len));
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (rows > (1u << 24) || cols > (1u << 24)) throw ParseError("tensor '" + name + "' is too large");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(r.get<std::uint64_t>());
    params.set(name, std::move(m));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint tensors");

  try {
    Checkpoint ck{OpinionModel(config_from_json(header.at("config")),
                               Vocabulary(header.at("vocabulary").get<std::vector<std::string>>()),
                               std::move(params)),
                  {}};
    ck.info.use_chains = header.at("use_chains").get<bool>();
    ck.info.seed = header.at("seed").get<std::uint64_t>();
    ck.info.epoch = header.at("epoch").get<int>();
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const OpinionModel& model, const CheckpointInfo& info,
                     const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, encode_checkpoint(model, info));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace lcr
