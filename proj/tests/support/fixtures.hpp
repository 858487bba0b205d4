#pragma once

// Generators wired to the shipped fixture models and to synthetic corpora.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarcgen/backends.hpp"
#include "sarcgen/emoji.hpp"
#include "sarcgen/inducer.hpp"
#include "sarcgen/lexicon.hpp"
#include "sarcgen/neutralizer.hpp"
#include "sarcgen/pipeline.hpp"
#include "sarcgen/text.hpp"

#ifndef SARCGEN_SOURCE_DIR
#error "SARCGEN_SOURCE_DIR must point at the source tree"
#endif

namespace sarcgen::testing {

inline std::filesystem::path source_path(const std::string& relative) {
    return std::filesystem::path(SARCGEN_SOURCE_DIR) / relative;
}

inline Normalizer shipped_normalizer() {
    Normalizer n;
    n.table = NormalizationTable::load_tsv(source_path("data/normalization.tsv"));
    return n;
}

inline const Lexicon& shipped_lexicon() {
    static const Lexicon lexicon = Lexicon::load_tsv(source_path("data/inflections.tsv"));
    return lexicon;
}

inline const EmojiVocabulary& shipped_emoji() {
    static const EmojiVocabulary vocabulary = EmojiVocabulary::load(source_path("data/emoji32.json"));
    return vocabulary;
}

// The ten-sentence fixture: lexicon neutralizer, phrase-table inducer, stub
// backends and a local retrieval corpus, all under data/fixtures.
inline SarcasmGenerator fixture_generator() {
    const auto dir = source_path("data/fixtures");
    PipelineModels models{load_neutralizer(dir / "neutralizer.json"), load_inducer(dir / "inducer.json")};
    PipelineOptions options;
    options.normalizer = shipped_normalizer();
    return SarcasmGenerator(std::move(models),
                            make_stub_suite(dir / "stub_backends.json", dir / "retrieval_corpus.json"),
                            shipped_lexicon(), shipped_emoji(), std::move(options));
}

inline std::vector<RawRecord> fixture_corpus() {
    return load_sentiment_corpus(source_path("data/fixtures/corpus10.txt"), Polarity::negative);
}

// Synthetic negative corpus "<subject> <negative verb> the <noun> <tail> ."
// with a lexicon neutralizer that deletes the verb and a phrase table that
// maps every neutral form to a positive one, so no record is flagged.
struct SyntheticSetup {
    std::vector<RawRecord> corpus;
    std::shared_ptr<const AttentionClassifier> neutralizer;
    std::shared_ptr<const Inducer> inducer;
    BackendSuite backends;
};

inline SyntheticSetup synthetic_setup(std::size_t count) {
    static const std::vector<std::string> subjects = {"i", "we", "my sister", "the team", "our neighbor",
                                                      "they", "he", "mom"};
    static const std::vector<std::string> verbs = {"hate", "dread"};
    static const std::vector<std::string> nouns = {"traffic", "rain",   "meeting", "commute", "weather",
                                                   "queue",   "homework", "noise", "bus",     "deadline"};
    static const std::vector<std::string> tails = {"today",  "again",        "every monday", "at work",
                                                   "at home", "this morning", "after lunch",  "all week",
                                                   "tonight", "on weekends"};
    SyntheticSetup s;
    std::map<std::string, std::string, std::less<>> table;
    const std::size_t space = subjects.size() * verbs.size() * nouns.size() * tails.size();
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t code = (i * 7919) % space;  // 7919 is coprime with the space, so codes are distinct
        const auto& tail = tails[code % tails.size()];
        code /= tails.size();
        const auto& noun = nouns[code % nouns.size()];
        code /= nouns.size();
        const auto& verb = verbs[code % verbs.size()];
        const auto& subject = subjects[code / verbs.size()];
        const std::string neutral = subject + " the " + noun + " " + tail + " .";
        s.corpus.push_back(RawRecord{subject + " " + verb + " the " + noun + " " + tail + " .", Polarity::negative,
                                     "synthetic:" + std::to_string(i)});
        table[neutral] = subject + " love the " + noun + " " + tail + " .";
    }
    std::map<std::string, LexiconSentimentModel::Entry, std::less<>> entries;
    for (const auto& v : verbs) entries[v] = {10.0f, -1.0f};
    entries["love"] = {10.0f, 1.0f};
    s.neutralizer = std::make_shared<LexiconSentimentModel>(std::move(entries), 1.0f);
    s.inducer = std::make_shared<PhraseTableInducer>(std::move(table));

    const auto stub = std::make_shared<const StubBackend>(nlohmann::json{
        {"xeffect_fallback", {"feels tired", "is annoyed", "gets bored", "is waiting", "loses patience"}}});
    s.backends.commonsense = stub;
    s.backends.generation = stub;
    s.backends.nli = stub;
    s.backends.emoji = stub;
    s.backends.retrieval = std::make_shared<const LocalRetrievalBackend>(
        std::map<std::string, std::vector<std::string>, std::less<>>{
            {"feel", {"i feel like a zombie .", "she felt exhausted after the trip ."}},
            {"feeling", {"feeling tired is my default ."}},
            {"annoyed", {"he sounded annoyed .", "we were all annoyed by the delay ."}},
            {"get", {"they get bored so fast ."}},
            {"waiting", {"waiting is the worst part .", "i spent the morning waiting ."}},
            {"lose", {"you lose patience quickly ."}},
        });
    return s;
}

inline SarcasmGenerator synthetic_generator(const SyntheticSetup& s) {
    PipelineOptions options;
    options.normalizer = shipped_normalizer();
    return SarcasmGenerator(PipelineModels{s.neutralizer, s.inducer}, s.backends, shipped_lexicon(), shipped_emoji(),
                            std::move(options));
}

}  // namespace sarcgen::testing
