#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "mdug/corpus.hpp"
#include "mdug/prompting.hpp"

using namespace mdug;

namespace {

int count(const GeneratorInput& in, Segment s) {
  int n = 0;
  for (Segment x : in.segments) n += x == s;
  return n;
}

}  // namespace

TEST_SUITE("prompting") {
  const Vocabulary vocab = corpus_vocabulary(GenConfig{});
  const std::vector<std::string> context{"i know", "you think that", "okay"};
  const std::string video = "people talk in the kitchen scene";
  const std::string image = "people talk in the office scene";

  TEST_CASE("prompt templates") {
    CHECK(build_prompt(0, 1).text == "the scene is continuous, while the dialogue session is not continuous");
    CHECK(build_prompt(0, 0).text == "the scene is continuous, while the dialogue session is continuous");
    CHECK(build_prompt(1, 1).text == "the scene is not continuous, while the dialogue session is not continuous");
    std::set<std::string> texts;
    for (int s : {0, 1})
      for (int t : {0, 1}) texts.insert(build_prompt(s, t).text);
    CHECK(texts.size() == 4);
    CHECK(build_prompt(1, 0).forbidden_pair);
    CHECK_FALSE(build_prompt(1, 1).forbidden_pair);
    CHECK_THROWS_AS(build_prompt(2, 0), std::invalid_argument);
    for (int id : vocab.encode(build_prompt(1, 0).text)) CHECK(id != kUnk);
  }

  TEST_CASE("all segments on: CLS, context, then three separator-led segments") {
    const auto in = assemble_input(context, video, image, build_prompt(0, 1), AblationFlags{}, vocab, 512);
    CHECK(in.token_ids.size() == in.segments.size());
    CHECK(in.segments.front() == Segment::cls);
    CHECK(count(in, Segment::separator) == 3);
    CHECK(count(in, Segment::context) == 6);
    std::vector<Segment> order;
    for (Segment s : in.segments)
      if (order.empty() || order.back() != s) order.push_back(s);
    CHECK(order == std::vector<Segment>{Segment::cls, Segment::context, Segment::separator, Segment::video_caption,
                                        Segment::separator, Segment::image_caption, Segment::separator, Segment::prompt});
    for (std::size_t i = 0; i < in.token_ids.size(); ++i) CHECK((in.segments[i] == Segment::separator) == (in.token_ids[i] == kSep));
  }

  TEST_CASE("disabled segments drop out with their separator") {
    const auto none = assemble_input(context, video, image, build_prompt(0, 1), {false, false, false}, vocab, 512);
    CHECK(none.token_ids.size() == 7);
    CHECK(count(none, Segment::separator) == 0);

    const auto no_image = assemble_input(context, video, image, build_prompt(0, 1), {true, false, true}, vocab, 512);
    CHECK(count(no_image, Segment::separator) == 2);
    CHECK(count(no_image, Segment::image_caption) == 0);
    CHECK(count(no_image, Segment::video_caption) == 6);
  }

  TEST_CASE("only the context is truncated, oldest utterances first") {
    const auto full = assemble_input(context, video, image, build_prompt(1, 1), AblationFlags{}, vocab, 512);
    const int n = static_cast<int>(full.token_ids.size());
    const auto cut = assemble_input(context, video, image, build_prompt(1, 1), AblationFlags{}, vocab, n - 2);
    CHECK(static_cast<int>(cut.token_ids.size()) == n - 2);
    CHECK(count(cut, Segment::prompt) == count(full, Segment::prompt));
    CHECK(count(cut, Segment::video_caption) == count(full, Segment::video_caption));
    CHECK(cut.token_ids[1] == vocab.id("you"));

    // Shedding three tokens removes "i know" and then all of "you think that".
    const auto tight = assemble_input(context, video, image, build_prompt(1, 1), AblationFlags{}, vocab, n - 3);
    CHECK(count(tight, Segment::context) == 1);
    CHECK(tight.token_ids[1] == vocab.id("okay"));

    // A lone utterance that is still too long loses its leading tokens.
    const auto lone = assemble_input({"you think that okay"}, video, image, build_prompt(1, 1), AblationFlags{}, vocab, n - 3);
    CHECK(static_cast<int>(lone.token_ids.size()) == n - 3);
    CHECK(count(lone, Segment::context) == 3);
    CHECK(lone.token_ids[1] == vocab.id("think"));
    CHECK_THROWS_AS(assemble_input(context, video, image, build_prompt(1, 1), AblationFlags{}, vocab, 20),
                    std::invalid_argument);
  }

  TEST_CASE("purity, errors and dumps") {
    const auto a = assemble_input(context, video, image, build_prompt(0, 0), AblationFlags{}, vocab, 512);
    const auto b = assemble_input(context, video, image, build_prompt(0, 0), AblationFlags{}, vocab, 512);
    CHECK(a.token_ids == b.token_ids);
    CHECK_THROWS_AS(assemble_input({}, video, image, build_prompt(0, 0), AblationFlags{}, vocab, 512), std::invalid_argument);
    const auto small = assemble_input({"okay"}, "", "", build_prompt(0, 0), {false, false, false}, vocab, 8);
    CHECK(dump_token_ids(small) == "[0," + std::to_string(vocab.id("okay")) + "]");
  }
}
