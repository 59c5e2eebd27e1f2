#include "dehaze/checkpoint.h"

#include <openssl/evp.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

namespace dehaze {
namespace {

constexpr char kMagic[8] = {'D', 'H', 'Z', 'C', 'K', 'P', 'T', '\n'};
constexpr std::size_t kDigestSize = 32;

using Kind = CheckpointError::Kind;

std::string digest(const std::string& bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out, &len, EVP_sha256(), nullptr) != 1 ||
      len != kDigestSize) {
    throw CheckpointError(Kind::kIo, "SHA-256 digest failed");
  }
  return std::string(reinterpret_cast<char*>(out), len);
}

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void doubles(const std::vector<double>& v) {
    pod<std::uint64_t>(v.size());
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void raw(const std::string& s) { buf_ += s; }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string what) : buf_(bytes), what_(std::move(what)) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() { return raw(pod<std::uint32_t>()); }
  std::vector<double> doubles() {
    const auto n = pod<std::uint64_t>();
    if (n > (buf_.size() - pos_) / sizeof(double)) truncated();
    std::vector<double> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (n > buf_.size() - pos_) truncated();
  }
  [[noreturn]] void truncated() {
    throw CheckpointError(Kind::kTruncated, what_ + " ends before its recorded content");
  }

  const std::string& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string params_payload(const ParameterList& params) {
  Writer w;
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.str(p->name);
    w.doubles(p->value);
  }
  return w.bytes();
}

std::string adam_payload(const AdamState& s) {
  Writer w;
  w.pod<std::int64_t>(s.t);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(s.m.size()));
  for (std::size_t k = 0; k < s.m.size(); ++k) {
    w.doubles(s.m[k]);
    w.doubles(s.v[k]);
  }
  return w.bytes();
}

struct Parsed {
  CheckpointMeta meta;
  std::vector<std::pair<std::string, std::string>> sections;  // name, payload
};

Parsed parse(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::kIo, "cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw CheckpointError(Kind::kIo, "error reading checkpoint " + path);

  Reader r(bytes, "checkpoint " + path);
  if (bytes.size() < sizeof(kMagic)) {
    throw CheckpointError(Kind::kTruncated, "checkpoint " + path + " is too short");
  }
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw CheckpointError(Kind::kFormat, path + " is not a checkpoint file");
  }
  Parsed p;
  p.meta.format_version = r.pod<std::uint32_t>();
  if (p.meta.format_version != kCheckpointVersion) {
    throw CheckpointError(Kind::kVersion,
                          "checkpoint " + path + " has format version " +
                              std::to_string(p.meta.format_version) + ", this build reads " +
                              std::to_string(kCheckpointVersion));
  }
  p.meta.iteration = r.pod<std::int64_t>();
  p.meta.epoch = r.pod<std::int64_t>();
  p.meta.step_in_epoch = r.pod<std::int64_t>();
  const auto phase = r.pod<std::uint8_t>();
  if (phase > 1) throw CheckpointError(Kind::kFormat, "checkpoint " + path + ": unknown phase");
  p.meta.phase = static_cast<Phase>(phase);
  p.meta.config_hash = r.str();
  p.meta.model_kind = r.str();
  const std::string header_digest = digest(bytes.substr(0, r.pos()));
  if (r.raw(kDigestSize) != header_digest) {
    throw CheckpointError(Kind::kIntegrity, "checkpoint " + path + ": header digest mismatch");
  }
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto len = r.pod<std::uint64_t>();
    std::string payload = r.raw(len);
    if (r.raw(kDigestSize) != digest(payload)) {
      throw CheckpointError(Kind::kIntegrity,
                            "checkpoint " + path + ": section '" + name + "' is corrupted");
    }
    p.meta.sections.push_back(name);
    p.sections.emplace_back(std::move(name), std::move(payload));
  }
  if (!r.done()) {
    throw CheckpointError(Kind::kFormat, "checkpoint " + path + " has trailing bytes");
  }
  return p;
}

const std::string& find_section(const Parsed& p, const std::string& name,
                                const std::string& path) {
  for (const auto& [n, payload] : p.sections) {
    if (n == name) return payload;
  }
  throw CheckpointError(Kind::kConfigMismatch,
                        "checkpoint " + path + " has no section '" + name + "'");
}

std::vector<std::vector<double>> decode_params(const std::string& payload,
                                               const ParameterList& params,
                                               const std::string& section) {
  Reader r(payload, "section '" + section + "'");
  const auto n = r.pod<std::uint32_t>();
  if (n != params.size()) {
    throw CheckpointError(Kind::kConfigMismatch,
                          "section '" + section + "' holds " + std::to_string(n) +
                              " parameters, the model expects " + std::to_string(params.size()));
  }
  std::vector<std::vector<double>> values;
  for (const Parameter* p : params) {
    const std::string name = r.str();
    std::vector<double> v = r.doubles();
    if (name != p->name || v.size() != p->size()) {
      throw CheckpointError(Kind::kConfigMismatch, "section '" + section + "': parameter '" +
                                                       name + "' does not match model parameter '" +
                                                       p->name + "'");
    }
    values.push_back(std::move(v));
  }
  if (!r.done()) throw CheckpointError(Kind::kFormat, "section '" + section + "' has extra data");
  return values;
}

AdamState decode_adam(const std::string& payload, const std::string& section) {
  Reader r(payload, "section '" + section + "'");
  AdamState s;
  s.t = r.pod<std::int64_t>();
  const auto n = r.pod<std::uint32_t>();
  for (std::uint32_t k = 0; k < n; ++k) {
    s.m.push_back(r.doubles());
    s.v.push_back(r.doubles());
  }
  if (!r.done()) throw CheckpointError(Kind::kFormat, "section '" + section + "' has extra data");
  return s;
}

}  // namespace

std::string phase_name(Phase p) { return p == Phase::kPretrain ? "pretrain" : "iff"; }

void save_checkpoint(const std::string& path, CganModel& model, const Adam& g_opt,
                     const Adam& d_opt, const CheckpointMeta& meta) {
  Writer header;
  header.raw(std::string(kMagic, sizeof(kMagic)));
  header.pod<std::uint32_t>(kCheckpointVersion);
  header.pod<std::int64_t>(meta.iteration);
  header.pod<std::int64_t>(meta.epoch);
  header.pod<std::int64_t>(meta.step_in_epoch);
  header.pod<std::uint8_t>(static_cast<std::uint8_t>(meta.phase));
  header.str(meta.config_hash);
  header.str(model.kind());

  std::vector<std::pair<std::string, std::string>> sections;
  for (const NamedSection& s : model.sections()) {
    sections.emplace_back(s.name, params_payload(s.params));
  }
  sections.emplace_back("adam.generator", adam_payload(g_opt.state()));
  sections.emplace_back("adam.discriminator", adam_payload(d_opt.state()));

  Writer w;
  w.raw(header.bytes());
  w.raw(digest(header.bytes()));
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, payload] : sections) {
    w.str(name);
    w.pod<std::uint64_t>(payload.size());
    w.raw(payload);
    w.raw(digest(payload));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Kind::kIo, "cannot write checkpoint " + tmp);
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw CheckpointError(Kind::kIo, "error writing checkpoint " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(Kind::kIo, "cannot move checkpoint into " + path + ": " + ec.message());
}

CheckpointMeta load_checkpoint(const std::string& path, CganModel& model, Adam& g_opt,
                               Adam& d_opt, const std::string& expected_hash) {
  Parsed p = parse(path);
  if (p.meta.model_kind != model.kind()) {
    throw CheckpointError(Kind::kConfigMismatch, "checkpoint " + path + " holds a '" +
                                                     p.meta.model_kind + "' model, not '" +
                                                     model.kind() + "'");
  }
  if (!expected_hash.empty() && p.meta.config_hash != expected_hash) {
    throw CheckpointError(Kind::kConfigMismatch,
                          "checkpoint " + path + " was written for model config " +
                              p.meta.config_hash + " but the current config hashes to " +
                              expected_hash);
  }
  // Decode everything first so a bad file leaves the model untouched.
  const std::vector<NamedSection> sections = model.sections();
  std::vector<std::vector<std::vector<double>>> values;
  for (const NamedSection& s : sections) {
    values.push_back(decode_params(find_section(p, s.name, path), s.params, s.name));
  }
  AdamState g_state = decode_adam(find_section(p, "adam.generator", path), "adam.generator");
  AdamState d_state =
      decode_adam(find_section(p, "adam.discriminator", path), "adam.discriminator");
  try {
    Adam g_check(g_opt.parameters(), g_opt.options());
    g_check.set_state(g_state);
    Adam d_check(d_opt.parameters(), d_opt.options());
    d_check.set_state(d_state);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(Kind::kConfigMismatch, "checkpoint " + path + ": " + e.what());
  }

  for (std::size_t s = 0; s < sections.size(); ++s) {
    for (std::size_t k = 0; k < sections[s].params.size(); ++k) {
      sections[s].params[k]->value = std::move(values[s][k]);
    }
  }
  g_opt.set_state(std::move(g_state));
  d_opt.set_state(std::move(d_state));
  return p.meta;
}

CheckpointMeta read_checkpoint_meta(const std::string& path) { return parse(path).meta; }

}  // namespace dehaze
