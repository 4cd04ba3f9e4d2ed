#include "hsid/checkpoint.hpp"

#include <string>

#include "binary_io.hpp"
#include "hsid/error.hpp"

namespace hsid {
namespace {

constexpr std::string_view kMagic = "HSCK";
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxList = 1024;

void write_spec(detail::ByteWriter& w, const ArchitectureSpec& s) {
  w.u32(static_cast<std::uint32_t>(s.adjacent_bands));
  w.u32(static_cast<std::uint32_t>(s.branch_channels));
  w.u32(static_cast<std::uint32_t>(s.scales.size()));
  for (auto k : s.scales) w.u32(static_cast<std::uint32_t>(k));
  w.u32(static_cast<std::uint32_t>(s.trunk_depth));
  w.u32(static_cast<std::uint32_t>(s.trunk_channels));
  w.u32(static_cast<std::uint32_t>(s.tap_layers.size()));
  for (auto t : s.tap_layers) w.u32(static_cast<std::uint32_t>(t));
  w.u32(static_cast<std::uint32_t>(s.head_kernel));
  w.u32(s.branch_relu ? 1u : 0u);
}

std::vector<std::size_t> read_list(detail::ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > kMaxList) throw Error(ErrorCode::DimensionOverflow, r.origin() + ": implausible list length " + std::to_string(n));
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = r.u32();
  return out;
}

ArchitectureSpec read_spec(detail::ByteReader& r) {
  ArchitectureSpec s;
  s.adjacent_bands = r.u32();
  s.branch_channels = r.u32();
  s.scales = read_list(r);
  s.trunk_depth = r.u32();
  s.trunk_channels = r.u32();
  s.tap_layers = read_list(r);
  s.head_kernel = r.u32();
  s.branch_relu = (r.u32() & 1u) != 0;
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ShapeMismatch, r.origin() + ": stored architecture is invalid (" + e.what() + ")");
  }
  return s;
}

template <typename T>
void write_blocks(detail::ByteWriter& w, const ModelParams<T>& params, const std::string& prefix) {
  const auto blocks = param_blocks(params);
  for (const auto& b : blocks) {
    const std::string name = prefix + b.name;
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (auto d : b.shape) w.u32(static_cast<std::uint32_t>(d));
    for (T v : b.values) w.f32(static_cast<float>(v));
  }
}

// Reads tensors in canonical order into `params`, which is already shaped
// from the stored spec; any disagreement is a ShapeMismatch.
void read_blocks(detail::ByteReader& r, ModelParams<float>& params, const std::string& prefix, std::uint32_t count) {
  auto blocks = param_blocks(params);
  if (count != blocks.size()) {
    throw Error(ErrorCode::ShapeMismatch, r.origin() + ": " + std::to_string(count) + " tensors stored, architecture has " +
                                              std::to_string(blocks.size()));
  }
  for (auto& b : blocks) {
    const std::uint32_t len = r.u32();
    if (len > 4096) throw Error(ErrorCode::DimensionOverflow, r.origin() + ": implausible tensor name length");
    const std::string name = r.bytes(len);
    if (name != prefix + b.name) {
      throw Error(ErrorCode::ShapeMismatch, r.origin() + ": found tensor '" + name + "', expected '" + prefix + b.name + "'");
    }
    const std::uint32_t rank = r.u32();
    if (rank > kMaxRank) throw Error(ErrorCode::DimensionOverflow, r.origin() + ": implausible rank for " + name);
    Shape dims(rank);
    for (auto& d : dims) d = r.u32();
    if (dims != b.shape) {
      throw Error(ErrorCode::ShapeMismatch, r.origin() + ": tensor " + name + " has shape " + shape_string(dims) +
                                                ", architecture expects " + shape_string(b.shape));
    }
    r.f32s(b.values);
  }
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ArchitectureSpec& spec, const ModelParams<T>& params,
                     const AdamState<T>* optimizer) {
  spec.validate();
  params.check_shapes(spec);
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  write_spec(w, spec);
  w.u32(static_cast<std::uint32_t>(param_blocks(params).size()));
  write_blocks(w, params, "");
  w.u32(optimizer ? 1u : 0u);
  if (optimizer) {
    optimizer->m.check_shapes(spec);
    optimizer->v.check_shapes(spec);
    w.u64(optimizer->step);
    w.u32(static_cast<std::uint32_t>(2 * param_blocks(params).size()));
    write_blocks(w, optimizer->m, "adam.m.");
    write_blocks(w, optimizer->v, "adam.v.");
  }
  w.write_to(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, path.string() + ": not an HSCK checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, path.string() + ": checkpoint version " + std::to_string(version) +
                                                ", this build reads " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  ck.spec = read_spec(r);
  ck.params = ModelParams<float>::zeros(ck.spec);
  read_blocks(r, ck.params, "", r.u32());
  const std::uint32_t has_optimizer = r.u32();
  if (has_optimizer > 1) throw Error(ErrorCode::ShapeMismatch, path.string() + ": corrupt optimizer flag");
  if (has_optimizer) {
    AdamState<float> state = AdamState<float>::fresh(ck.spec);
    state.step = r.u64();
    const std::uint32_t count = r.u32();
    if (count % 2 != 0) throw Error(ErrorCode::ShapeMismatch, path.string() + ": odd optimizer tensor count");
    read_blocks(r, state.m, "adam.m.", count / 2);
    read_blocks(r, state.v, "adam.v.", count / 2);
    ck.optimizer = std::move(state);
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ArchitectureSpec& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.spec == expected)) {
    std::string detail;
    if (ck.spec.adjacent_bands != expected.adjacent_bands) {
      detail = "K=" + std::to_string(ck.spec.adjacent_bands) + " stored, K=" + std::to_string(expected.adjacent_bands) +
               " expected";
    } else {
      detail = "layer configuration differs";
    }
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": checkpoint architecture mismatch (" + detail + ")");
  }
  return ck;
}

template void save_checkpoint(const std::filesystem::path&, const ArchitectureSpec&, const ModelParams<float>&,
                              const AdamState<float>*);
template void save_checkpoint(const std::filesystem::path&, const ArchitectureSpec&, const ModelParams<double>&,
                              const AdamState<double>*);

}  // namespace hsid
