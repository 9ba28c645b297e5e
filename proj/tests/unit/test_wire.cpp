#include <random>

#include "doctest.h"
#include "rhseg/cluster.hpp"
#include "rhseg/error.hpp"
#include "rhseg/wire.hpp"
#include "support/oracle.hpp"

using namespace rhseg;
using namespace rhseg::wire;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

AssignPayload sample_assign() {
  AssignPayload a;
  a.section = SectionId{2, 1, 0};
  a.edge = 2;
  a.bands = 1;
  a.spectral_weight = 0.21;
  a.section_target = 2;
  a.strategy = StrategyKind::PerPair;
  a.tile_k = 16;
  a.samples = {0, 0, 9, 9};
  return a;
}

}  // namespace

TEST_CASE("frame layout") {
  const auto bytes = encode_message({MessageType::Hello, {}});
  CHECK(bytes == std::vector<std::uint8_t>{'R', 'H', 'S', 'G', 1, 1, 0, 0, 0, 0});
  const auto big = encode_message({MessageType::Error, std::vector<std::uint8_t>(0x0102, 7)});
  CHECK(big[5] == 4);
  CHECK(big[6] == 0x02);
  CHECK(big[7] == 0x01);
  CHECK(big.size() == kHeaderSize + 0x0102);
}

TEST_CASE("frame round trip and rejection") {
  for (std::uint8_t t = 1; t <= 5; ++t) {
    const Message m{static_cast<MessageType>(t), {1, 2, 3, t}};
    auto bytes = encode_message(m);
    bytes.push_back(0xAA);  // next frame's first byte
    std::size_t used = 0;
    CHECK(decode_message(bytes, &used) == m);
    CHECK(used == bytes.size() - 1);
  }
  auto good = encode_message({MessageType::Assign, {1, 2, 3}});
  auto bad = good;
  bad[0] = 'X';
  CHECK(kind_of([&] { decode_message(bad); }) == ErrorKind::BadMagic);
  bad = good;
  bad[4] = 2;
  CHECK(kind_of([&] { decode_message(bad); }) == ErrorKind::BadVersion);
  bad = good;
  bad[5] = 9;
  CHECK(kind_of([&] { decode_message(bad); }) == ErrorKind::UnknownType);
  bad = good;
  bad[5] = 0;
  CHECK(kind_of([&] { decode_message(bad); }) == ErrorKind::UnknownType);
  bad = good;
  bad.pop_back();
  CHECK(kind_of([&] { decode_message(bad); }) == ErrorKind::Truncated);
  CHECK(kind_of([&] { decode_message(std::span(good).first(7)); }) == ErrorKind::Truncated);
}

TEST_CASE("assign payload") {
  const AssignPayload a = sample_assign();
  const auto bytes = encode_assign(a);
  CHECK(bytes.size() == 28 + 16);
  CHECK(decode_assign(bytes) == a);
  auto cut = bytes;
  cut.pop_back();
  CHECK(kind_of([&] { decode_assign(cut); }) == ErrorKind::Truncated);
  auto extra = bytes;
  extra.push_back(0);
  CHECK(kind_of([&] { decode_assign(extra); }) == ErrorKind::ProtocolError);
  auto strategy = bytes;
  strategy[25] = 7;
  CHECK(kind_of([&] { decode_assign(strategy); }) == ErrorKind::ProtocolError);
  // A huge declared edge must not allocate.
  auto huge = bytes;
  huge[5] = huge[6] = huge[7] = huge[8] = 0xFF;
  CHECK(kind_of([&] { decode_assign(huge); }) == ErrorKind::Truncated);
}

TEST_CASE("result payload") {
  std::mt19937_64 rng(4);
  const HyperImage img = rhseg::testing::random_image(rng, 6, 3, false);
  RegionGraph g = init_region_graph(img);
  HsegParams p;
  p.target_regions = 5;
  const HsegRun run = hseg_run(g, p);
  const ResultPayload r = make_result(SectionId{3, 2, 1}, run.hierarchy, g);
  const auto bytes = encode_result(r);
  const ResultPayload back = decode_result(bytes, 6, 3);
  CHECK(back == r);
  CHECK(result_graph(back, 6, 3) == g);
  CHECK(result_hierarchy(back, 6) == run.hierarchy);
  CHECK(kind_of([&] { decode_result(std::span(bytes).first(bytes.size() - 1), 6, 3); }) ==
        ErrorKind::Truncated);
  CHECK(kind_of([&] { decode_result(bytes, 5, 3); }) == ErrorKind::ProtocolError);
}

TEST_CASE("decoders survive fuzzed input") {
  std::mt19937_64 rng(2718);
  const auto valid_assign = encode_message({MessageType::Assign, encode_assign(sample_assign())});
  RegionGraph g = init_region_graph(rhseg::testing::image_from_rows({{0, 0}, {9, 9}}));
  const HsegRun run = hseg_run(g, HsegParams{});
  const auto valid_result = encode_result(make_result(SectionId{1, 0, 0}, run.hierarchy, g));

  std::size_t rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> bytes;
    switch (i % 3) {
      case 0:
        bytes.resize(rng() % 64);
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
        if (bytes.size() >= 6 && i % 2) {
          bytes[0] = 'R', bytes[1] = 'H', bytes[2] = 'S', bytes[3] = 'G', bytes[4] = 1;
        }
        break;
      case 1:
        bytes = valid_assign;
        for (int k = 0; k < 3; ++k) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
        if (rng() % 2) bytes.resize(rng() % bytes.size());
        break;
      default:
        bytes = valid_result;
        for (int k = 0; k < 3; ++k) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
        if (rng() % 2) bytes.resize(rng() % bytes.size());
        break;
    }
    try {
      if (i % 3 == 2) {
        const ResultPayload r = decode_result(bytes, 2, 1);
        (void)result_graph(r, 2, 1);
      } else {
        const Message m = decode_message(bytes);
        if (m.type == MessageType::Assign) (void)decode_assign(m.payload);
      }
    } catch (const Error&) {
      ++rejected;
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("process_assignment") {
  SUBCASE("1x1 section yields an empty log and one region") {
    AssignPayload a = sample_assign();
    a.edge = 1;
    a.samples = {3.5f};
    a.section_target = 1;
    const ResultPayload r = process_assignment(a);
    CHECK(r.merges.empty());
    REQUIRE(r.regions.size() == 1);
    CHECK(r.regions[0].pixel_count == 1);
    CHECK(r.assignment == std::vector<RegionId>{0});
  }
  SUBCASE("2x2 [[0,0],[9,9]] to two regions merges twice at zero") {
    const ResultPayload r = process_assignment(sample_assign());
    REQUIRE(r.merges.size() == 2);
    CHECK(r.merges[0].dissimilarity == 0.0);
    CHECK(r.merges[1].dissimilarity == 0.0);
    CHECK(r.section == SectionId{2, 1, 0});
  }
  SUBCASE("computing a section twice gives identical bytes") {
    std::mt19937_64 rng(6);
    AssignPayload a = sample_assign();
    a.edge = 8;
    a.bands = 4;
    a.section_target = 3;
    const HyperImage img = rhseg::testing::random_image(rng, 8, 4, false);
    a.samples.assign(img.samples().begin(), img.samples().end());
    CHECK(encode_result(process_assignment(a, 1)) == encode_result(process_assignment(a, 3)));
  }
  SUBCASE("invalid parameters are errors") {
    AssignPayload a = sample_assign();
    a.section_target = 0;
    CHECK_THROWS_AS(process_assignment(a), Error);
    a = sample_assign();
    a.tile_k = 0;
    CHECK_THROWS_AS(process_assignment(a), Error);
  }
}
