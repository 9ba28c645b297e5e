#include "rhseg/wire.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <string_view>

#include "rhseg/error.hpp"

namespace rhseg::wire {
namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'H', 'S', 'G'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void reserve(std::size_t n) { bytes_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n) throw Error(ErrorKind::Truncated, std::string(what) + " runs past the payload");
  }
  void finish(std::string_view what) const {
    if (remaining() != 0) {
      throw Error(ErrorKind::ProtocolError, std::to_string(remaining()) + " trailing bytes after " +
                                                std::string(what));
    }
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n), "field");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_section(Writer& w, const SectionId& id) {
  w.u8(id.level);
  w.u16(id.row);
  w.u16(id.col);
}

SectionId read_section(Reader& r) {
  SectionId id;
  id.level = r.u8();
  id.row = r.u16();
  id.col = r.u16();
  if (id.level < 1 || id.level > 15) throw Error(ErrorKind::ProtocolError, "section level out of range");
  const std::size_t side = std::size_t{1} << (id.level - 1);
  if (id.row >= side || id.col >= side) throw Error(ErrorKind::ProtocolError, "section position out of range");
  return id;
}

std::uint32_t narrow32(std::size_t v, std::string_view what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_message(const Message& message) {
  Writer w;
  w.reserve(kHeaderSize + message.payload.size());
  for (std::uint8_t b : kMagic) w.u8(b);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(message.type));
  w.u32(narrow32(message.payload.size(), "payload"));
  w.raw(message.payload);
  return w.take();
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw Error(ErrorKind::Truncated, "frame shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorKind::BadMagic, "frame magic is not RHSG");
  if (bytes[4] != kVersion) {
    throw Error(ErrorKind::BadVersion, "unsupported protocol version " + std::to_string(bytes[4]));
  }
  const std::uint8_t type = bytes[5];
  if (type < 1 || type > 5) throw Error(ErrorKind::UnknownType, "unknown message type " + std::to_string(type));
  Reader r(bytes.subspan(6, 4));
  return FrameHeader{static_cast<MessageType>(type), r.u32()};
}

Message decode_message(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  const FrameHeader h = decode_header(bytes);
  if (bytes.size() - kHeaderSize < h.payload_len) {
    throw Error(ErrorKind::Truncated, "payload length " + std::to_string(h.payload_len) + " exceeds the " +
                                          std::to_string(bytes.size() - kHeaderSize) + " bytes present");
  }
  const auto payload = bytes.subspan(kHeaderSize, h.payload_len);
  if (consumed) *consumed = kHeaderSize + h.payload_len;
  return Message{h.type, {payload.begin(), payload.end()}};
}

std::vector<std::uint8_t> encode_assign(const AssignPayload& p) {
  const std::size_t expected = std::size_t{p.edge} * p.edge * p.bands;
  if (p.samples.size() != expected) throw Error(ErrorKind::ShapeMismatch, "sample count does not match shape");
  Writer w;
  w.reserve(28 + 4 * p.samples.size());
  write_section(w, p.section);
  w.u32(p.edge);
  w.u32(p.bands);
  w.f64(p.spectral_weight);
  w.u32(p.section_target);
  w.u8(static_cast<std::uint8_t>(p.strategy));
  w.u16(p.tile_k);
  for (float s : p.samples) w.f32(s);
  return w.take();
}

AssignPayload decode_assign(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  AssignPayload p;
  p.section = read_section(r);
  p.edge = r.u32();
  p.bands = r.u32();
  p.spectral_weight = r.f64();
  p.section_target = r.u32();
  const std::uint8_t strategy = r.u8();
  if (strategy > 2) throw Error(ErrorKind::ProtocolError, "unknown strategy code " + std::to_string(strategy));
  p.strategy = static_cast<StrategyKind>(strategy);
  p.tile_k = r.u16();
  // 64-bit arithmetic cannot overflow for 32-bit factors when checked in steps.
  const std::uint64_t pixels = std::uint64_t{p.edge} * p.edge;
  if (p.bands != 0 && pixels > r.remaining() / 4 / p.bands) {
    throw Error(ErrorKind::Truncated, "samples run past the payload");
  }
  const std::size_t count = static_cast<std::size_t>(pixels) * p.bands;
  r.need(4 * count, "samples");
  p.samples.resize(count);
  for (float& s : p.samples) s = r.f32();
  r.finish("assignment");
  return p;
}

std::vector<std::uint8_t> encode_result(const ResultPayload& p) {
  Writer w;
  write_section(w, p.section);
  w.u32(narrow32(p.merges.size(), "merge count"));
  for (const MergeRecord& m : p.merges) {
    w.u32(m.survivor);
    w.u32(m.absorbed);
    w.f64(m.dissimilarity);
    w.u8(static_cast<std::uint8_t>(m.kind));
  }
  w.u32(narrow32(p.regions.size(), "region count"));
  for (const Region& reg : p.regions) {
    w.u32(reg.id);
    w.u32(reg.pixel_count);
    for (double s : reg.band_sums) w.f64(s);
    if (reg.adjacency.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorKind::InvalidArgument, "region " + std::to_string(reg.id) + " has too many neighbors");
    }
    w.u16(static_cast<std::uint16_t>(reg.adjacency.size()));
    for (RegionId n : reg.adjacency) w.u32(n);
  }
  for (RegionId a : p.assignment) w.u32(a);
  return w.take();
}

ResultPayload decode_result(std::span<const std::uint8_t> bytes, std::size_t edge, std::size_t bands) {
  Reader r(bytes);
  ResultPayload p;
  p.section = read_section(r);
  const std::uint32_t merges = r.u32();
  r.need(std::size_t{merges} * 17, "merge log");
  p.merges.resize(merges);
  for (std::size_t i = 0; i < merges; ++i) {
    MergeRecord& m = p.merges[i];
    m.step = i;
    m.survivor = r.u32();
    m.absorbed = r.u32();
    m.dissimilarity = r.f64();
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw Error(ErrorKind::ProtocolError, "unknown merge kind " + std::to_string(kind));
    m.kind = static_cast<MergeKind>(kind);
  }
  const std::uint32_t regions = r.u32();
  r.need(std::size_t{regions} * (10 + 8 * bands), "region table");
  p.regions.resize(regions);
  for (Region& reg : p.regions) {
    reg.id = r.u32();
    reg.pixel_count = r.u32();
    reg.band_sums.resize(bands);
    for (double& s : reg.band_sums) s = r.f64();
    const std::uint16_t degree = r.u16();
    r.need(std::size_t{degree} * 4, "adjacency list");
    reg.adjacency.resize(degree);
    for (RegionId& n : reg.adjacency) n = r.u32();
  }
  r.need(edge * edge * 4, "pixel assignment");
  p.assignment.resize(edge * edge);
  for (RegionId& a : p.assignment) a = r.u32();
  r.finish("result");
  return p;
}

std::vector<std::uint8_t> encode_error(const std::string& reason) { return {reason.begin(), reason.end()}; }

std::string decode_error(std::span<const std::uint8_t> bytes) { return {bytes.begin(), bytes.end()}; }

AssignPayload make_assign(const SectionJob& job, const HyperImage& image, const SearchStrategy& strategy) {
  AssignPayload p;
  p.section = job.id;
  p.edge = narrow32(image.edge(), "edge");
  p.bands = narrow32(image.bands(), "bands");
  p.spectral_weight = job.params.spectral_weight;
  p.section_target = narrow32(job.params.target_regions, "section target");
  p.strategy = strategy.kind;
  if (strategy.tile_k > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "tile size does not fit the wire format");
  }
  p.tile_k = static_cast<std::uint16_t>(strategy.tile_k);
  p.samples.assign(image.samples().begin(), image.samples().end());
  return p;
}

ResultPayload make_result(const SectionId& section, const MergeHierarchy& merges, const RegionGraph& graph) {
  ResultPayload p;
  p.section = section;
  p.merges = merges.records;
  p.regions = graph.live_regions();
  p.assignment.assign(graph.assignment().begin(), graph.assignment().end());
  return p;
}

RegionGraph result_graph(const ResultPayload& result, std::size_t edge, std::size_t bands,
                         Connectivity connectivity) {
  return RegionGraph::from_parts(edge, bands, connectivity, edge * edge, result.regions, result.assignment);
}

MergeHierarchy result_hierarchy(const ResultPayload& result, std::size_t edge) {
  return MergeHierarchy{edge * edge, result.merges};
}

}  // namespace rhseg::wire
