#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sarcgen/errors.hpp"
#include "sarcgen/nn/params.hpp"
#include "sarcgen/text.hpp"
#include "support/fixtures.hpp"

using namespace sarcgen;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const auto path = fs::temp_directory_path() / ("sarcgen_text_" + name);
    std::ofstream(path, std::ios::binary) << content;
    return path;
}

std::string words(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
    return s;
}

}  // namespace

TEST_CASE("normalize_text lowercases and splits punctuation") {
    CHECK(normalize_text("Home with the flu.") == "home with the flu .");
}

TEST_CASE("normalize_text strips hashtag marks and drops mentions") {
    CHECK(normalize_text("@bob #monday is bad") == "monday is bad");
    CHECK(normalize_text("#Blessed   morning\t@someone !") == "blessed morning !");
}

TEST_CASE("normalize_text rejects text that normalizes to nothing") {
    CHECK_THROWS_AS(normalize_text(""), EmptyTextError);
    CHECK_THROWS_AS(normalize_text("   "), EmptyTextError);
    CHECK_THROWS_AS(normalize_text("@only @mentions"), EmptyTextError);
}

TEST_CASE("the normalization table rewrites variants and the corrector runs when configured") {
    auto n = testing::shipped_normalizer();
    CHECK(normalize_text("u r gonna love it", n) == "you are going to love it");
    n.corrector = [](const std::string& t) { return t == "teh" ? std::string{"the"} : t; };
    CHECK(normalize_text("teh game", n) == "the game");
}

TEST_CASE("normalize_text is idempotent") {
    const auto n = testing::shipped_normalizer();
    const char* samples[] = {"Home with the flu.",   "@bob #monday is bad",  "u r gonna love it!!!",
                             "it's 2day... lol",     "Can't WAIT for b4 :)", "well-known state-of-the-art stuff"};
    for (const char* s : samples) {
        const auto once = normalize_text(s, n);
        CHECK(normalize_text(once, n) == once);
    }
}

TEST_CASE("tokenize examples") {
    CHECK(tokenize("mom is in a bad mood today .").size() == 8);
    CHECK(tokenize("").empty());
    CHECK(tokenize("that movie was bad .") == std::vector<std::string>{"that", "movie", "was", "bad", "."});
    CHECK(tokenize("wait... what?!") == std::vector<std::string>{"wait", "...", "what", "?", "!"});
    CHECK(tokenize("don't over-think it") == std::vector<std::string>{"don't", "over-think", "it"});
}

TEST_CASE("join(tokenize(t)) round-trips normalized text") {
    const auto n = testing::shipped_normalizer();
    nn::Rng rng(11);
    const std::string pieces[] = {"Great", "day", "!!", "#fun", "@x", "it's", "...", "rain", ",", "u", "WOW"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string raw;
        const std::size_t len = 1 + rng.below(12);
        for (std::size_t i = 0; i < len; ++i) raw += pieces[rng.below(std::size(pieces))] + " ";
        std::string normalized;
        try {
            normalized = normalize_text(raw, n);
        } catch (const EmptyTextError&) {
            continue;
        }
        CHECK(join(tokenize(normalized)) == normalized);
    }
}

TEST_CASE("make_utterance produces lowercase tokens without marks") {
    const auto u = make_utterance("#Bad day @work", Polarity::negative);
    CHECK(u.tokens == std::vector<std::string>{"bad", "day"});
    CHECK(u.text() == "bad day");
    CHECK(u.polarity == Polarity::negative);
    CHECK(u.original == "#Bad day @work");
}

TEST_CASE("load_sentiment_corpus keeps order and skips blank lines") {
    const auto path = write_temp("three.txt", "first line\n\n  \nsecond line\nthird line\n");
    const auto records = load_sentiment_corpus(path, Polarity::negative);
    REQUIRE(records.size() == 3);
    CHECK(records[0].text == "first line");
    CHECK(records[2].text == "third line");
    for (const auto& r : records) CHECK(r.polarity == Polarity::negative);
    CHECK(records[1].source_id == "sarcgen_text_three.txt:4");
}

TEST_CASE("load_sentiment_corpus errors") {
    CHECK_THROWS_AS(load_sentiment_corpus("/nonexistent/corpus.txt", Polarity::positive), IOError);
    CHECK_THROWS_AS(load_sentiment_corpus(write_temp("empty.txt", "\n\n"), Polarity::positive), EmptyCorpusError);
}

TEST_CASE("filter_by_length counts words, not punctuation, and keeps the boundary") {
    std::vector<RawRecord> records = {
        {words(31), Polarity::negative, "a"},
        {words(30), Polarity::negative, "b"},
        {words(30) + " . , !", Polarity::negative, "c"},
        {"short one", Polarity::negative, "d"},
    };
    const auto kept = filter_by_length(records);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].source_id == "b");
    CHECK(kept[1].source_id == "c");
    CHECK(kept[2].source_id == "d");
}

TEST_CASE("filter_by_length on a mixed fixture of ten sentences") {
    std::vector<RawRecord> records;
    const std::size_t lengths[] = {5, 29, 30, 31, 45, 1, 30, 33, 12, 0};
    for (std::size_t i = 0; i < 10; ++i) {
        records.push_back({lengths[i] ? words(lengths[i]) + " ." : ".", Polarity::positive, std::to_string(i)});
    }
    const auto kept = filter_by_length(records);
    std::vector<std::string> ids;
    for (const auto& r : kept) ids.push_back(r.source_id);
    CHECK(ids == std::vector<std::string>{"0", "1", "2", "5", "6", "8", "9"});
}

TEST_CASE("render_for_display capitalizes sentences and attaches punctuation") {
    CHECK(render_for_display("i really love it . i sat feeling miserable .") == "I really love it. I sat feeling miserable.");
    CHECK(render_for_display("wow , what a day !") == "Wow, what a day!");
    CHECK(render_for_display("i love rain .\xF0\x9F\x98\x92") == "I love rain.\xF0\x9F\x98\x92");
    CHECK(render_for_display("i love rain . nice\xF0\x9F\x98\x92") == "I love rain. Nice\xF0\x9F\x98\x92");
}
