#include <doctest.h>

#include "sarcgen/emoji.hpp"
#include "sarcgen/errors.hpp"
#include "sarcgen/nn/params.hpp"
#include "support/fixtures.hpp"

using namespace sarcgen;

namespace {

class FixedScores final : public EmojiBackend {
public:
    explicit FixedScores(std::vector<double> s) : scores_(std::move(s)) {}
    std::vector<double> emoji_scores(const std::string&) const override { return scores_; }

private:
    std::vector<double> scores_;
};

nlohmann::json vocabulary_json() {
    auto j = nlohmann::json::array();
    for (std::size_t i = 0; i < kEmojiCount; ++i) {
        char hex[8];
        std::snprintf(hex, sizeof hex, "%X", 0x1F600u + static_cast<unsigned>(i));
        j.push_back({{"index", i}, {"codepoints", {hex}}, {"shortname", "e" + std::to_string(i)}});
    }
    return j;
}

}  // namespace

TEST_CASE("shipped vocabulary has 32 labels in order") {
    const auto& v = testing::shipped_emoji();
    CHECK(v.size() == kEmojiCount);
    CHECK(v.at(0).shortname == "face_with_tears_of_joy");
    CHECK(v.at(0).utf8() == "\xF0\x9F\x98\x82");
    CHECK(v.find_shortname("unamused_face") == std::optional<std::size_t>(7));
    CHECK_FALSE(v.find_shortname("no_such_face").has_value());
    CHECK_THROWS_AS(v.at(32), ContractError);
}

TEST_CASE("vocabulary validation") {
    auto j = vocabulary_json();
    CHECK(EmojiVocabulary::from_json(j).size() == kEmojiCount);
    auto short_list = j;
    short_list.erase(short_list.end() - 1);
    CHECK_THROWS_AS(EmojiVocabulary::from_json(short_list), ValidationError);
    auto gap = j;
    gap[5]["index"] = 40;
    CHECK_THROWS_AS(EmojiVocabulary::from_json(gap), ValidationError);
    auto bad_cp = j;
    bad_cp[3]["codepoints"] = {"D800"};
    CHECK_THROWS_AS(EmojiVocabulary::from_json(bad_cp), ValidationError);
    CHECK_THROWS_AS(EmojiVocabulary::from_json(nlohmann::json::object()), ValidationError);
}

TEST_CASE("prediction normalizes scores and breaks ties low") {
    const auto& v = testing::shipped_emoji();
    std::vector<double> s(kEmojiCount, 1.0);
    s[9] = 3.0;
    s[4] = 3.0;
    const auto p = predict_emoji(FixedScores(s), "text", v);
    CHECK(p.label_index == 4);
    double total = 0.0;
    for (double x : p.distribution) total += x;
    CHECK(total == doctest::Approx(1.0));

    std::vector<double> one_hot(kEmojiCount, 0.0);
    one_hot[13] = 1.0;
    CHECK(predict_emoji(FixedScores(one_hot), "text", v).label_index == 13);
}

TEST_CASE("prediction enforces the backend contract") {
    const auto& v = testing::shipped_emoji();
    CHECK_THROWS_AS(predict_emoji(FixedScores(std::vector<double>(31, 1.0)), "t", v), ContractError);
    CHECK_THROWS_AS(predict_emoji(FixedScores(std::vector<double>(kEmojiCount, 0.0)), "t", v), ContractError);
    std::vector<double> negative(kEmojiCount, 1.0);
    negative[0] = -1.0;
    CHECK_THROWS_AS(predict_emoji(FixedScores(negative), "t", v), ContractError);
    std::vector<double> nan(kEmojiCount, 1.0);
    nan[2] = NAN;
    CHECK_THROWS_AS(predict_emoji(FixedScores(nan), "t", v), ContractError);
    CHECK_THROWS_AS(predict_emoji(FixedScores(std::vector<double>(kEmojiCount, 1.0)), "", v), PreconditionError);
}

TEST_CASE("attach and strip are inverse") {
    const auto& v = testing::shipped_emoji();
    nn::Rng rng(3);
    const char* sentences[] = {"i love mondays .", "great", "what a day !", "so fun \xF0\x9F\x98\x82 really"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::string s = sentences[rng.below(std::size(sentences))];
        const auto index = rng.below(kEmojiCount);
        const auto with = attach_emoji(s, index, v);
        CHECK(with.size() > s.size());
        CHECK(ends_with_emoji(with, v));
        CHECK(strip_last_emoji(with, v) == s);
        CHECK(count_emoji(with, v) == count_emoji(s, v) + 1);
    }
    CHECK_THROWS_AS(attach_emoji("x", 32, v), ContractError);
    CHECK_THROWS_AS(attach_emoji("", 0, v), PreconditionError);
    CHECK(strip_last_emoji("no emoji here", v) == "no emoji here");
}

TEST_CASE("prediction text joins input and context with one space") {
    CHECK(build_prediction_text("i love rain .", std::string("i got soaked .")) == "i love rain . i got soaked .");
    CHECK(build_prediction_text("i love rain .", std::nullopt) == "i love rain .");
    CHECK_THROWS_AS(build_prediction_text("", std::nullopt), PreconditionError);
}

TEST_CASE("utf8 encoding") {
    CHECK(encode_utf8(U'A') == "A");
    CHECK(encode_utf8(0xE9) == "\xC3\xA9");
    CHECK(encode_utf8(0x2764) == "\xE2\x9D\xA4");
    CHECK(encode_utf8(0x1F612) == "\xF0\x9F\x98\x92");
}
