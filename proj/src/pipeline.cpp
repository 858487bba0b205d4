#include "sarcgen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "sarcgen/csv.hpp"
#include "sarcgen/errors.hpp"
#include "sarcgen/nn/params.hpp"

namespace sarcgen {
namespace {

nlohmann::json optional_json(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
nlohmann::json optional_json(const std::optional<std::size_t>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<T>();
}

std::string lowered_text(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lower_ascii(t));
    return join(out);
}

bool wants(std::span<const SystemVariant> variants, SystemVariant v) {
    return std::find(variants.begin(), variants.end(), v) != variants.end();
}

// Ids recorded in a JSONL file; missing files hold none. A final line
// without its newline is left over from an interrupted run: it is cut off
// so the record is redone and later appends start on a fresh line.
void collect_ids(const std::filesystem::path& path, std::unordered_set<std::string>& ids) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto last = content.rfind('\n');
    const std::size_t complete = last == std::string::npos ? 0 : last + 1;
    if (complete < content.size()) {
        std::filesystem::resize_file(path, complete);
        content.resize(complete);
    }
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.contains("id") && j["id"].is_string()) ids.insert(j["id"].get<std::string>());
        } catch (const nlohmann::json::exception&) {
            // Unparseable complete lines are kept and ignored.
        }
    }
}

std::ofstream open_append(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw IOError("cannot write " + path.string());
    return out;
}

std::filesystem::path with_suffix(const std::filesystem::path& p, std::string_view suffix) {
    auto out = p;
    out.replace_extension();
    out += suffix;
    return out;
}

}  // namespace

std::string_view to_string(SystemVariant v) {
    switch (v) {
        case SystemVariant::full_model: return "full_model";
        case SystemVariant::without_emoji: return "without_emoji";
        case SystemVariant::without_context: return "without_context";
        case SystemVariant::external_baseline: return "external_baseline";
    }
    return "full_model";
}

SystemVariant system_variant_from_string(std::string_view s) {
    for (auto v : kAllVariants) {
        if (to_string(v) == s) return v;
    }
    throw ValidationError("unknown system '" + std::string{s} + "'");
}

void to_json(nlohmann::json& j, const SarcasticRecord& r) {
    nlohmann::json candidates = nlohmann::json::array();
    for (const auto& c : r.candidates) {
        candidates.push_back({{"sentence", c.sentence},
                              {"provenance", to_string(c.provenance)},
                              {"keyword", c.keyword},
                              {"incongruity", c.incongruity ? nlohmann::json(*c.incongruity) : nlohmann::json(nullptr)}});
    }
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& [v, text] : r.outputs) outputs[std::string{to_string(v)}] = text;
    j = nlohmann::json{{"schema_version", kRecordSchemaVersion},
                       {"id", r.id},
                       {"input", r.input},
                       {"neutralized", r.neutralized},
                       {"reversed", r.reversed},
                       {"inferred_phrase", optional_json(r.inferred_phrase)},
                       {"keyword", optional_json(r.keyword)},
                       {"subject", optional_json(r.subject)},
                       {"candidates", candidates},
                       {"selected_context", optional_json(r.selected_context)},
                       {"emoji_index", optional_json(r.emoji_index)},
                       {"emoji_index_without_context", optional_json(r.emoji_index_without_context)},
                       {"outputs", outputs},
                       {"flags", r.flags},
                       {"no_context_reason", r.no_context_reason}};
}

void from_json(const nlohmann::json& j, SarcasticRecord& r) {
    const int version = j.value("schema_version", 0);
    if (version != kRecordSchemaVersion) throw ValidationError("unsupported record schema_version " + std::to_string(version));
    r = SarcasticRecord{};
    r.id = j.at("id").get<std::string>();
    r.input = j.at("input").get<std::string>();
    r.neutralized = j.at("neutralized").get<std::string>();
    r.reversed = j.at("reversed").get<std::string>();
    r.inferred_phrase = optional_from<std::string>(j, "inferred_phrase");
    r.keyword = optional_from<std::string>(j, "keyword");
    r.subject = optional_from<std::string>(j, "subject");
    for (const auto& c : j.at("candidates")) {
        ContextCandidate cand;
        cand.sentence = c.at("sentence").get<std::string>();
        cand.provenance = provenance_from_string(c.at("provenance").get<std::string>());
        cand.keyword = c.value("keyword", "");
        cand.incongruity = optional_from<double>(c, "incongruity");
        r.candidates.push_back(std::move(cand));
    }
    r.selected_context = optional_from<std::string>(j, "selected_context");
    r.emoji_index = optional_from<std::size_t>(j, "emoji_index");
    r.emoji_index_without_context = optional_from<std::size_t>(j, "emoji_index_without_context");
    for (const auto& [name, text] : j.at("outputs").items()) r.outputs[system_variant_from_string(name)] = text.get<std::string>();
    for (const auto& f : j.at("flags")) r.flags.insert(f.get<std::string>());
    r.no_context_reason = j.value("no_context_reason", "");
}

// ---------------------------------------------------------------------------
// SarcasmGenerator
// ---------------------------------------------------------------------------

SarcasmGenerator::SarcasmGenerator(PipelineModels models, BackendSuite backends, Lexicon lexicon,
                                   EmojiVocabulary vocabulary, PipelineOptions options)
    : models_(std::move(models)),
      backends_(std::move(backends)),
      lexicon_(std::move(lexicon)),
      vocabulary_(std::move(vocabulary)),
      options_(std::move(options)) {
    if (!models_.neutralizer || !models_.inducer) throw PreconditionError("pipeline needs a neutralizer and an inducer");
    if (!backends_.commonsense || !backends_.retrieval || !backends_.generation || !backends_.nli || !backends_.emoji) {
        throw PreconditionError("pipeline needs every backend configured");
    }
    cache_ = std::make_unique<RetrievalCache>(backends_.retrieval, lexicon_);
}

void SarcasmGenerator::build_context(SarcasticRecord& record, const Utterance& input) const {
    try {
        const auto phrase = infer_effect_phrase(*backends_.commonsense, record.input);
        record.inferred_phrase = phrase.text;
        record.subject = extract_subject(record.input, lexicon_);
        std::string keyword;
        try {
            keyword = extract_keyword(phrase, lexicon_);
            record.keyword = keyword;
        } catch (const NoKeywordError&) {
            // Generation still works from the phrase itself.
        }

        std::vector<ContextCandidate> candidates;
        auto add = [&](const std::string& sentence, Provenance provenance) {
            std::string text;
            try {
                text = normalize_text(sentence, options_.normalizer);
            } catch (const EmptyTextError&) {
                return;
            }
            const bool duplicate = std::any_of(candidates.begin(), candidates.end(),
                                               [&](const ContextCandidate& c) { return c.sentence == text; });
            if (!duplicate) candidates.push_back(ContextCandidate{text, provenance, keyword, std::nullopt});
        };

        add(generate_context(*backends_.generation, *record.subject, agree_auxiliary(*record.subject, phrase)),
            Provenance::generated);
        if (!keyword.empty()) {
            const auto retrieved = cache_->get(keyword);
            for (const auto& s : filter_candidates(retrieved, keyword, input.size(), lexicon_)) {
                add(harmonize_pronouns(s, input), Provenance::retrieved);
            }
        }
        const auto best = select_context(*backends_.nli, record.reversed, candidates, options_.nli_direction);
        record.selected_context = candidates[best].sentence;
        record.candidates = std::move(candidates);
    } catch (const NoInferenceError& e) {
        record.flags.insert(std::string{flags::kNoContext});
        record.no_context_reason = e.what();
    } catch (const NoContextError& e) {
        record.flags.insert(std::string{flags::kNoContext});
        record.no_context_reason = e.what();
    }
}

SarcasticRecord SarcasmGenerator::generate(const std::string& input, std::string id,
                                           std::span<const SystemVariant> variants) const {
    if (wants(variants, SystemVariant::external_baseline)) {
        throw PreconditionError("external_baseline outputs are imported, not generated");
    }
    SarcasticRecord record;
    record.id = std::move(id);
    const auto utterance = make_utterance(input, Polarity::negative, options_.normalizer);
    record.input = utterance.text();

    const auto neutral = neutralize(*models_.neutralizer, utterance, options_.threshold_factor);
    if (neutral.degenerate) record.flags.insert(std::string{flags::kCollapseFallback});
    record.neutralized = neutral.utterance.text();

    const auto induced = induce_positive(*models_.inducer, neutral.utterance);
    if (induced.copy_fallback) record.flags.insert(std::string{flags::kCopyFallback});
    record.reversed = lowered_text(induced.tokens);
    if (record.reversed.empty()) record.reversed = record.neutralized;

    const bool full = wants(variants, SystemVariant::full_model);
    const bool no_emoji = wants(variants, SystemVariant::without_emoji);
    const bool no_context = wants(variants, SystemVariant::without_context);
    if (full || no_emoji) build_context(record, utterance);

    const auto& context = record.selected_context;
    if (no_context || (full && !context)) {
        record.emoji_index_without_context =
            predict_emoji(*backends_.emoji, build_prediction_text(record.input, std::nullopt), vocabulary_).label_index;
    }
    if (full && context) {
        record.emoji_index =
            predict_emoji(*backends_.emoji, build_prediction_text(record.input, context), vocabulary_).label_index;
    }

    const std::string with_context = context ? record.reversed + " " + *context : record.reversed;
    if (full) {
        // Without a context the full model degrades to the no-context variant.
        const auto emoji = context ? *record.emoji_index : *record.emoji_index_without_context;
        record.outputs[SystemVariant::full_model] = attach_emoji(with_context, emoji, vocabulary_);
    }
    if (no_emoji) record.outputs[SystemVariant::without_emoji] = with_context;
    if (no_context) {
        record.outputs[SystemVariant::without_context] =
            attach_emoji(record.reversed, *record.emoji_index_without_context, vocabulary_);
    }
    return record;
}

SarcasticRecord generate_sarcasm(const SarcasmGenerator& generator, const std::string& input, SystemVariant variant) {
    const SystemVariant one[] = {variant};
    return generator.generate(input, {}, one);
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

std::filesystem::path flagged_path(const std::filesystem::path& dataset) { return with_suffix(dataset, ".flagged.jsonl"); }
std::filesystem::path errors_path(const std::filesystem::path& dataset) { return with_suffix(dataset, ".errors.jsonl"); }

DatasetSummary generate_dataset(std::span<const RawRecord> corpus, const SarcasmGenerator& generator,
                                const std::filesystem::path& out_path, const DatasetOptions& options) {
    struct Job {
        std::string id;
        const std::string* text = nullptr;
    };
    struct Outcome {
        std::optional<SarcasticRecord> record;
        nlohmann::json error;
    };

    // The id snapshot is taken once, before any work fans out.
    std::unordered_set<std::string> done;
    collect_ids(out_path, done);
    collect_ids(flagged_path(out_path), done);
    collect_ids(errors_path(out_path), done);

    DatasetSummary summary;
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto id = corpus[i].source_id.empty() ? "item:" + std::to_string(i + 1) : corpus[i].source_id;
        if (!done.insert(id).second) {
            ++summary.skipped;
            continue;
        }
        jobs.push_back(Job{std::move(id), &corpus[i].text});
    }

    auto out = open_append(out_path);
    auto flagged_out = open_append(flagged_path(out_path));
    auto errors_out = open_append(errors_path(out_path));

    const std::size_t workers = std::max<std::size_t>(1, options.workers);
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
    std::vector<Outcome> outcomes;
    for (std::size_t begin = 0; begin < jobs.size(); begin += chunk) {
        const std::size_t end = std::min(jobs.size(), begin + chunk);
        outcomes.assign(end - begin, Outcome{});
        std::atomic<std::size_t> next{begin};
        auto work = [&] {
            for (std::size_t i = next++; i < end; i = next++) {
                auto& slot = outcomes[i - begin];
                try {
                    slot.record = generator.generate(*jobs[i].text, jobs[i].id);
                } catch (const Error& e) {
                    slot.error = {{"id", jobs[i].id}, {"input", *jobs[i].text}, {"error", e.kind()}, {"message", e.what()}};
                }
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < std::min(workers, end - begin); ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        // Single appender, input order.
        for (const auto& o : outcomes) {
            if (!o.record) {
                errors_out << o.error.dump() << '\n';
                ++summary.failed;
            } else if (o.record->flagged()) {
                flagged_out << nlohmann::json(*o.record).dump() << '\n';
                ++summary.flagged;
            } else {
                out << nlohmann::json(*o.record).dump() << '\n';
                ++summary.written;
            }
        }
        out.flush();
        flagged_out.flush();
        errors_out.flush();
        if (!out || !flagged_out || !errors_out) throw IOError("write failed under " + out_path.string());
    }
    return summary;
}

std::vector<SarcasticRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    std::vector<SarcasticRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(nlohmann::json::parse(line).get<SarcasticRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Baseline import and rating sheets
// ---------------------------------------------------------------------------

std::map<std::string, std::string> import_baseline(const std::filesystem::path& baseline_jsonl,
                                                    std::span<const SarcasticRecord> dataset) {
    std::map<std::string, std::string> by_input;
    std::set<std::string, std::less<>> ids;
    for (const auto& r : dataset) {
        by_input.emplace(r.input, r.id);
        ids.insert(r.id);
    }
    std::ifstream in(baseline_jsonl);
    if (!in) throw IOError("cannot open " + baseline_jsonl.string());
    std::map<std::string, std::string> baseline;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = baseline_jsonl.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (!j.contains("output") || !j["output"].is_string()) throw ValidationError(where + ": missing \"output\"");
        std::string id;
        if (j.contains("id")) {
            id = j["id"].get<std::string>();
            if (ids.count(id) == 0) continue;
        } else if (j.contains("input")) {
            std::string key;
            try {
                key = normalize_text(j["input"].get<std::string>());
            } catch (const EmptyTextError&) {
                continue;
            }
            const auto it = by_input.find(key);
            if (it == by_input.end()) continue;
            id = it->second;
        } else {
            throw ValidationError(where + ": needs \"id\" or \"input\"");
        }
        baseline[id] = j["output"].get<std::string>();
    }
    return baseline;
}

void save_baseline(const std::filesystem::path& path, const std::map<std::string, std::string>& baseline) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path.string());
    for (const auto& [id, text] : baseline) out << nlohmann::json{{"id", id}, {"output", text}}.dump() << '\n';
}

std::map<std::string, std::string> load_baseline(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    std::map<std::string, std::string> baseline;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line);
        baseline[j.at("id").get<std::string>()] = j.at("output").get<std::string>();
    }
    return baseline;
}

std::vector<SheetRow> sample_for_evaluation(std::span<const SarcasticRecord> dataset, std::size_t n, std::uint64_t seed,
                                            const std::map<std::string, std::string>& baseline) {
    if (n > dataset.size()) {
        throw RangeError("cannot sample " + std::to_string(n) + " items from " + std::to_string(dataset.size()) + " records");
    }
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    nn::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);

    std::vector<SheetRow> rows;
    rows.reserve(4 * n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = dataset[order[k]];
        for (auto v : kAllVariants) {
            std::string text;
            if (v == SystemVariant::external_baseline) {
                if (const auto it = baseline.find(r.id); it != baseline.end()) text = it->second;
            } else if (const auto it = r.outputs.find(v); it != r.outputs.end()) {
                text = render_for_display(it->second);
            }
            rows.push_back(SheetRow{r.id, v, std::move(text)});
        }
    }
    return rows;
}

void write_rating_sheet(const std::filesystem::path& path, std::span<const SheetRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path.string());
    out << "item_id,system,judge_id,text,S,C,H,G\n";
    for (const auto& r : rows) {
        const std::string fields[] = {r.item_id, std::string{to_string(r.system)}, "", r.text, "", "", "", ""};
        out << csv_line(fields) << '\n';
    }
}

}  // namespace sarcgen
