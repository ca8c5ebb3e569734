#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "tid/error.hpp"
#include "tid/wire.hpp"

namespace tid {
namespace {

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected tid::Error";
  return Errc::IoFailure;
}

std::vector<std::string> split_on_lf(const std::string& stream) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (auto lf = stream.find('\n'); lf != std::string::npos; lf = stream.find('\n', start)) {
    out.push_back(stream.substr(start, lf - start));
    start = lf + 1;
  }
  return out;
}

TEST(EncodeFrame, AppendsLineFeed) {
  EXPECT_EQ(encode_frame("<tid a/>"), "<tid a/>\n");
  EXPECT_EQ(encode_frame(""), "\n");
  EXPECT_EQ(encode_frame(testing::kCanonicalExample).size(), testing::kCanonicalExample.size() + 1);
  EXPECT_EQ(error_code([] { encode_frame("a\nb"); }), Errc::ContainsNewline);
}

TEST(FrameDecoder, ReassemblesAcrossChunks) {
  FrameDecoder decoder;
  EXPECT_TRUE(decoder.feed("<tid a").empty());
  EXPECT_EQ(decoder.buffered(), 6u);
  EXPECT_EQ(decoder.feed("/>\n"), (std::vector<std::string>{"<tid a/>"}));
  EXPECT_EQ(decoder.buffered(), 0u);
}

TEST(FrameDecoder, SeveralFramesInOneChunk) {
  FrameDecoder decoder;
  EXPECT_EQ(decoder.feed("A\nB\n"), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(decoder.feed("C\nD"), (std::vector<std::string>{"C"}));
  EXPECT_EQ(decoder.feed(""), (std::vector<std::string>{}));
  EXPECT_EQ(decoder.feed("\n"), (std::vector<std::string>{"D"}));
}

TEST(FrameDecoder, CarriageReturnIsContent) {
  FrameDecoder decoder;
  EXPECT_EQ(decoder.feed("A\r\n"), (std::vector<std::string>{"A\r"}));
}

TEST(FrameDecoder, OversizedPartialIsFatal) {
  FrameDecoder decoder;
  const std::string big(65536, 'x');
  EXPECT_TRUE(decoder.feed(big).empty());
  EXPECT_EQ(error_code([&] { decoder.feed("x"); }), Errc::FrameTooLarge);
  // Stays failed.
  EXPECT_EQ(error_code([&] { decoder.feed("\n"); }), Errc::FrameTooLarge);
}

TEST(FrameDecoder, OversizedInOneChunk) {
  FrameDecoder decoder;
  const std::string big(65537, 'x');
  EXPECT_EQ(error_code([&] { decoder.feed(big); }), Errc::FrameTooLarge);
}

TEST(FrameDecoder, MaxSizedFrameAccepted) {
  FrameDecoder decoder(16);
  EXPECT_EQ(decoder.feed(std::string(16, 'y') + "\n").front().size(), 16u);
  EXPECT_EQ(error_code([&] { decoder.feed(std::string(17, 'y') + "\n"); }), Errc::FrameTooLarge);
}

TEST(FrameDecoder, InvalidUtf8IsFatal) {
  for (const char* bad : {"\xFF\n", "\xC0\xAF\n", "\xED\xA0\x80\n", "\xF4\x90\x80\x80\n", "\xE6\x97\n"}) {
    FrameDecoder decoder;
    EXPECT_EQ(error_code([&] { decoder.feed(bad); }), Errc::InvalidUtf8) << bad;
  }
  FrameDecoder decoder;
  EXPECT_EQ(decoder.feed("\xE6\x97").size(), 0u);
  EXPECT_EQ(decoder.feed("\xA5\n"), (std::vector<std::string>{"\xE6\x97\xA5"}));
}

TEST(FrameDecoder, EncodeDecodeDuality) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    const auto text = serialize_message(testing::random_message(rng));
    FrameDecoder decoder;
    ASSERT_EQ(decoder.feed(encode_frame(text)), (std::vector<std::string>{text}));
  }
}

TEST(FrameDecoder, ChunkingInvariance) {
  std::mt19937_64 rng(4242);
  for (int round = 0; round < 300; ++round) {
    std::string stream;
    const int frames = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int f = 0; f < frames; ++f) {
      std::string frame = testing::random_text(rng, 20, true);
      std::erase(frame, '\n');
      stream += frame + '\n';
    }
    const auto expected = split_on_lf(stream);

    FrameDecoder decoder;
    std::vector<std::string> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const auto len = std::uniform_int_distribution<std::size_t>(0, 17)(rng);
      const auto piece = std::string_view(stream).substr(pos, len);
      for (auto& frame : decoder.feed(piece)) got.push_back(std::move(frame));
      pos += piece.size();
    }
    ASSERT_EQ(got, expected);
    ASSERT_EQ(decoder.buffered(), 0u);
  }
}

}  // namespace
}  // namespace tid
