#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rhseg/hseg.hpp"
#include "rhseg/region_graph.hpp"
#include "rhseg/rhseg.hpp"

namespace rhseg::wire {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;  // magic, version, type, payload length

enum class MessageType : std::uint8_t { Hello = 1, Assign = 2, Result = 3, Error = 4, Shutdown = 5 };

struct Message {
  MessageType type = MessageType::Hello;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Message&, const Message&) = default;
};

struct FrameHeader {
  MessageType type = MessageType::Hello;
  std::uint32_t payload_len = 0;
};

std::vector<std::uint8_t> encode_message(const Message& message);

// Validates the first kHeaderSize bytes. Throws BadMagic, BadVersion,
// UnknownType, or Truncated when fewer than kHeaderSize bytes are given.
FrameHeader decode_header(std::span<const std::uint8_t> bytes);

// Decodes one frame from the front of `bytes`; `consumed` receives its size.
// Throws Truncated when the declared payload runs past the end.
Message decode_message(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

struct AssignPayload {
  SectionId section;
  std::uint32_t edge = 0;
  std::uint32_t bands = 0;
  double spectral_weight = 0.0;
  std::uint32_t section_target = 0;
  StrategyKind strategy = StrategyKind::Sequential;
  std::uint16_t tile_k = 0;
  std::vector<float> samples;  // band-sequential

  friend bool operator==(const AssignPayload&, const AssignPayload&) = default;
};

struct ResultPayload {
  SectionId section;
  std::vector<MergeRecord> merges;  // step is implied by position
  std::vector<Region> regions;      // ascending id
  std::vector<RegionId> assignment;

  friend bool operator==(const ResultPayload&, const ResultPayload&) = default;
};

std::vector<std::uint8_t> encode_assign(const AssignPayload& payload);
// Throws Truncated or ProtocolError when the bytes do not describe exactly
// one payload.
AssignPayload decode_assign(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_result(const ResultPayload& payload);
// The graph shape is not on the wire; the receiver supplies it from the
// assignment it sent.
ResultPayload decode_result(std::span<const std::uint8_t> bytes, std::size_t edge, std::size_t bands);

std::vector<std::uint8_t> encode_error(const std::string& reason);
std::string decode_error(std::span<const std::uint8_t> bytes);

AssignPayload make_assign(const SectionJob& job, const HyperImage& image, const SearchStrategy& strategy);
ResultPayload make_result(const SectionId& section, const MergeHierarchy& merges, const RegionGraph& graph);

// Rebuilds the section's final graph. Throws InvariantViolation when the
// parts are inconsistent.
RegionGraph result_graph(const ResultPayload& result, std::size_t edge, std::size_t bands,
                         Connectivity connectivity = Connectivity::Eight);
MergeHierarchy result_hierarchy(const ResultPayload& result, std::size_t edge);

}  // namespace rhseg::wire
