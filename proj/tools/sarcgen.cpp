#include <CLI11.hpp>
#include <httplib.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "sarcgen/backends.hpp"
#include "sarcgen/bleu.hpp"
#include "sarcgen/emoji.hpp"
#include "sarcgen/errors.hpp"
#include "sarcgen/eval.hpp"
#include "sarcgen/inducer.hpp"
#include "sarcgen/lexicon.hpp"
#include "sarcgen/neutralizer.hpp"
#include "sarcgen/pipeline.hpp"
#include "sarcgen/text.hpp"

#ifndef SARCGEN_DATA_DIR
#define SARCGEN_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace sarcgen;

namespace {

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path.string());
    out << text;
}

struct DataFiles {
    std::string dir = SARCGEN_DATA_DIR;
    std::string normalization;
    std::string lexicon;
    std::string emoji_vocab;

    fs::path resolve(const std::string& given, const char* name) const {
        return given.empty() ? fs::path(dir) / name : fs::path(given);
    }
    Normalizer normalizer() const {
        const auto path = resolve(normalization, "normalization.tsv");
        Normalizer n;
        if (fs::exists(path)) n.table = NormalizationTable::load_tsv(path);
        return n;
    }

    void add_options(CLI::App* app) {
        app->add_option("--data-dir", dir, "Folder holding the default data files")->capture_default_str();
        app->add_option("--normalization", normalization, "Normalization TSV (default <data-dir>/normalization.tsv)");
    }
};

std::vector<Utterance> load_utterances(const fs::path& path, Polarity polarity, const Normalizer& normalizer,
                                       std::size_t max_words) {
    const auto records = filter_by_length(load_sentiment_corpus(path, polarity), max_words);
    std::vector<Utterance> out;
    for (const auto& r : records) {
        try {
            out.push_back(make_utterance(r.text, polarity, normalizer));
        } catch (const EmptyTextError&) {
            // Nothing left after normalization.
        }
    }
    return out;
}

template <typename Config>
Config load_config(const std::string& path) {
    Config c;
    if (!path.empty()) c = read_json_file(path).get<Config>();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sarcastic sentence generation and evaluation"};
    app.require_subcommand(1);

    // train-neutralizer
    struct {
        std::string pos, neg, test_pos, test_neg, out, config;
        std::uint64_t seed = 13;
        bool seed_set = false;
        std::size_t max_words = 30;
        DataFiles data;
    } tn;
    auto* train_neutralizer = app.add_subcommand("train-neutralizer", "Train the attention sentiment classifier");
    train_neutralizer->add_option("--corpus-pos", tn.pos, "Positive sentences, one per line")->required();
    train_neutralizer->add_option("--corpus-neg", tn.neg, "Negative sentences, one per line")->required();
    train_neutralizer->add_option("--test-pos", tn.test_pos, "Held-out positive sentences");
    train_neutralizer->add_option("--test-neg", tn.test_neg, "Held-out negative sentences");
    train_neutralizer->add_option("--config", tn.config, "ClassifierConfig JSON");
    auto* tn_seed = train_neutralizer->add_option("--seed", tn.seed, "Random seed");
    train_neutralizer->add_option("--max-words", tn.max_words, "Length filter")->capture_default_str();
    train_neutralizer->add_option("--out", tn.out, "Output stem (writes <out>.bin and <out>.json)")->required();
    tn.data.add_options(train_neutralizer);

    // build-pairs
    struct {
        std::string pos, neutralizer, out;
        float threshold = kDefaultThresholdFactor;
        std::size_t max_words = 30;
        DataFiles data;
    } bp;
    auto* build_pairs = app.add_subcommand("build-pairs", "Neutralize a positive corpus into training pairs");
    build_pairs->add_option("--corpus-pos", bp.pos, "Positive sentences, one per line")->required();
    build_pairs->add_option("--neutralizer", bp.neutralizer, "Neutralizer sidecar JSON")->required();
    build_pairs->add_option("--max-words", bp.max_words, "Length filter")->capture_default_str();
    build_pairs->add_option("--out", bp.out, "Pairs JSONL")->required();
    bp.data.add_options(build_pairs);

    // train-inducer
    struct {
        std::string pairs, out, config;
        std::uint64_t seed = 17;
    } ti;
    auto* train_inducer_cmd = app.add_subcommand("train-inducer", "Train the positive induction model");
    train_inducer_cmd->add_option("--pairs", ti.pairs, "Pairs JSONL from build-pairs")->required();
    train_inducer_cmd->add_option("--config", ti.config, "InducerConfig JSON");
    auto* ti_seed = train_inducer_cmd->add_option("--seed", ti.seed, "Random seed");
    train_inducer_cmd->add_option("--out", ti.out, "Output stem (writes <out>.bin and <out>.json)")->required();

    // induce
    struct {
        std::string model, in, out;
        DataFiles data;
    } ind;
    auto* induce_cmd = app.add_subcommand("induce", "Translate neutral sentences into positive ones");
    induce_cmd->add_option("--model", ind.model, "Inducer sidecar JSON")->required();
    induce_cmd->add_option("--in", ind.in, "Neutral sentences, one per line")->required();
    induce_cmd->add_option("--out", ind.out, "Positive sentences, one per line")->required();
    ind.data.add_options(induce_cmd);

    // generate
    struct {
        std::string corpus, models_dir, backends = "stub", backend_config, retrieval_corpus, out, lexicon, emoji_vocab;
        std::size_t workers = 1, chunk = 64, max_words = 30;
        float threshold = kDefaultThresholdFactor;
        std::string nli_direction = "reversed-as-premise";
        DataFiles data;
    } gen;
    auto* generate_cmd = app.add_subcommand("generate", "Build the sarcastic dataset");
    generate_cmd->add_option("--input-corpus", gen.corpus, "Negative sentences, one per line")->required();
    generate_cmd->add_option("--models-dir", gen.models_dir, "Folder with neutralizer.json and inducer.json")->required();
    generate_cmd->add_option("--backends", gen.backends, "stub or remote")
        ->check(CLI::IsMember({"stub", "remote"}))
        ->capture_default_str();
    generate_cmd->add_option("--backend-config", gen.backend_config,
                             "Stub fixture or remote config JSON (default <models-dir>/stub_backends.json or "
                             "<models-dir>/backends_remote.json)");
    generate_cmd->add_option("--retrieval-corpus", gen.retrieval_corpus,
                             "Keyword -> sentences JSON for the stub (default <models-dir>/retrieval_corpus.json if present)");
    generate_cmd->add_option("--lexicon", gen.lexicon, "Inflection TSV (default <data-dir>/inflections.tsv)");
    generate_cmd->add_option("--emoji-vocab", gen.emoji_vocab, "Emoji vocabulary JSON (default <data-dir>/emoji32.json)");
    generate_cmd->add_option("--threshold-factor", gen.threshold, "Neutralization threshold factor")->capture_default_str();
    generate_cmd->add_option("--nli-direction", gen.nli_direction, "reversed-as-premise or candidate-as-premise")
        ->check(CLI::IsMember({"reversed-as-premise", "candidate-as-premise"}))
        ->capture_default_str();
    generate_cmd->add_option("--workers", gen.workers, "Concurrent records")->capture_default_str();
    generate_cmd->add_option("--chunk-size", gen.chunk, "Records between ordered appends")->capture_default_str();
    generate_cmd->add_option("--max-words", gen.max_words, "Length filter")->capture_default_str();
    generate_cmd->add_option("--out", gen.out, "Dataset JSONL (appended; reruns resume)")->required();
    gen.data.add_options(generate_cmd);

    // sample-eval
    struct {
        std::string dataset, baseline, out;
        std::size_t n = 100;
        std::uint64_t seed = 0;
    } se;
    auto* sample_cmd = app.add_subcommand("sample-eval", "Draw items and write the judge rating sheet");
    sample_cmd->add_option("--dataset", se.dataset, "Dataset JSONL")->required();
    sample_cmd->add_option("--n", se.n, "Items to sample")->capture_default_str();
    sample_cmd->add_option("--seed", se.seed, "Sampling seed")->required();
    sample_cmd->add_option("--baseline", se.baseline, "Baseline JSONL from import-baseline");
    sample_cmd->add_option("--out", se.out, "Rating sheet CSV")->required();

    // import-baseline
    struct {
        std::string dataset, in, out;
    } ib;
    auto* import_cmd = app.add_subcommand("import-baseline", "Attach external baseline outputs to dataset ids");
    import_cmd->add_option("--dataset", ib.dataset, "Dataset JSONL")->required();
    import_cmd->add_option("--in", ib.in, "Baseline JSONL with output and id or input")->required();
    import_cmd->add_option("--out", ib.out, "Baseline JSONL keyed by id")->required();

    // evaluate
    struct {
        std::string ratings, predictions, out, variance_mode = "ratings";
    } ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Agreement, score tables and detection metrics");
    evaluate_cmd->require_subcommand(1);
    auto add_rating_opts = [&](CLI::App* sub) {
        sub->add_option("--ratings", ev.ratings, "Ratings CSV")->required();
        sub->add_option("--out", ev.out, "Report JSON");
        sub->add_option("--variance-mode", ev.variance_mode, "ratings or item_means")
            ->check(CLI::IsMember({"ratings", "item_means"}))
            ->capture_default_str();
    };
    auto* ev_icc = evaluate_cmd->add_subcommand("icc", "ICC(2,k) per system and criterion");
    auto* ev_means = evaluate_cmd->add_subcommand("means", "Average ratings per system and criterion");
    auto* ev_vars = evaluate_cmd->add_subcommand("variances", "Rating variances per system and criterion");
    for (auto* sub : {ev_icc, ev_means, ev_vars}) add_rating_opts(sub);
    auto* ev_detect = evaluate_cmd->add_subcommand("detect", "F1, precision, recall and ROC AUC");
    auto* det_pred = ev_detect->add_option("--predictions", ev.predictions, "Predictions CSV");
    ev_detect->add_option("--ratings", ev.predictions, "Alias of --predictions")->excludes(det_pred);
    ev_detect->add_option("--out", ev.out, "Report JSON");

    // serve-stub
    struct {
        std::string fixture, retrieval_corpus, host = "127.0.0.1", model_id = "stub";
        int port = 8080;
    } ss;
    auto* serve_cmd = app.add_subcommand("serve-stub", "Serve a stub fixture over the backend wire contract");
    serve_cmd->add_option("--fixture", ss.fixture, "Stub fixture JSON")->required();
    serve_cmd->add_option("--retrieval-corpus", ss.retrieval_corpus, "Keyword -> sentences JSON");
    serve_cmd->add_option("--host", ss.host)->capture_default_str();
    serve_cmd->add_option("--port", ss.port)->capture_default_str();
    serve_cmd->add_option("--model-id", ss.model_id)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_neutralizer) {
            auto config = load_config<ClassifierConfig>(tn.config);
            if (*tn_seed) config.seed = tn.seed;
            const auto normalizer = tn.data.normalizer();
            auto train = load_utterances(tn.pos, Polarity::positive, normalizer, tn.max_words);
            const auto neg = load_utterances(tn.neg, Polarity::negative, normalizer, tn.max_words);
            train.insert(train.end(), neg.begin(), neg.end());
            std::vector<Utterance> test;
            if (!tn.test_pos.empty()) test = load_utterances(tn.test_pos, Polarity::positive, normalizer, tn.max_words);
            if (!tn.test_neg.empty()) {
                const auto t = load_utterances(tn.test_neg, Polarity::negative, normalizer, tn.max_words);
                test.insert(test.end(), t.begin(), t.end());
            }
            const auto model = train_sentiment_classifier(train, test, config);
            model.save(tn.out);
            std::cout << nlohmann::json(model.report()).dump(2) << '\n';
        } else if (*build_pairs) {
            const auto neutralizer = load_neutralizer(bp.neutralizer);
            const auto corpus = load_utterances(bp.pos, Polarity::positive, bp.data.normalizer(), bp.max_words);
            const auto pairs = build_induction_pairs(corpus, *neutralizer);
            save_pairs(bp.out, pairs);
            std::cout << pairs.size() << " pairs from " << corpus.size() << " sentences\n";
        } else if (*train_inducer_cmd) {
            auto config = load_config<InducerConfig>(ti.config);
            if (*ti_seed) config.seed = ti.seed;
            const auto pairs = load_pairs(ti.pairs);
            const auto model = train_inducer(pairs, config);
            model.save(ti.out);
            std::cout << nlohmann::json(model.report()).dump(2) << '\n';
        } else if (*induce_cmd) {
            const auto model = load_inducer(ind.model);
            const auto normalizer = ind.data.normalizer();
            std::ifstream in(ind.in);
            if (!in) throw IOError("cannot open " + ind.in);
            std::ofstream out(ind.out, std::ios::binary);
            if (!out) throw IOError("cannot write " + ind.out);
            std::string line;
            while (std::getline(in, line)) {
                try {
                    out << induce_positive(*model, make_utterance(line, Polarity::unknown, normalizer)).text() << '\n';
                } catch (const EmptyTextError&) {
                    out << '\n';
                }
            }
        } else if (*generate_cmd) {
            const fs::path models(gen.models_dir);
            PipelineModels pm{load_neutralizer(models / "neutralizer.json"), load_inducer(models / "inducer.json")};
            BackendSuite suite;
            if (gen.backends == "stub") {
                const fs::path fixture = gen.backend_config.empty() ? models / "stub_backends.json" : fs::path(gen.backend_config);
                fs::path corpus = gen.retrieval_corpus;
                if (corpus.empty() && fs::exists(models / "retrieval_corpus.json")) corpus = models / "retrieval_corpus.json";
                suite = make_stub_suite(fixture, corpus);
            } else {
                suite = make_remote_suite(gen.backend_config.empty() ? models / "backends_remote.json"
                                                                     : fs::path(gen.backend_config));
            }
            PipelineOptions options;
            options.threshold_factor = gen.threshold;
            options.nli_direction = gen.nli_direction == "reversed-as-premise" ? NliDirection::reversed_as_premise
                                                                               : NliDirection::candidate_as_premise;
            options.normalizer = gen.data.normalizer();
            const SarcasmGenerator generator(std::move(pm), std::move(suite),
                                             Lexicon::load_tsv(gen.data.resolve(gen.lexicon, "inflections.tsv")),
                                             EmojiVocabulary::load(gen.data.resolve(gen.emoji_vocab, "emoji32.json")),
                                             std::move(options));
            const auto corpus = filter_by_length(load_sentiment_corpus(gen.corpus, Polarity::negative), gen.max_words);
            const auto summary = generate_dataset(corpus, generator, gen.out, DatasetOptions{gen.workers, gen.chunk});
            std::cout << nlohmann::json{{"written", summary.written},
                                        {"flagged", summary.flagged},
                                        {"failed", summary.failed},
                                        {"skipped", summary.skipped}}
                             .dump()
                      << '\n';
        } else if (*sample_cmd) {
            const auto dataset = load_dataset(se.dataset);
            std::map<std::string, std::string> baseline;
            if (!se.baseline.empty()) baseline = load_baseline(se.baseline);
            const auto rows = sample_for_evaluation(dataset, se.n, se.seed, baseline);
            write_rating_sheet(se.out, rows);
            std::cout << rows.size() << " rows\n";
        } else if (*import_cmd) {
            const auto dataset = load_dataset(ib.dataset);
            const auto baseline = import_baseline(ib.in, dataset);
            save_baseline(ib.out, baseline);
            std::cout << baseline.size() << " of " << dataset.size() << " records matched\n";
        } else if (*evaluate_cmd) {
            if (*ev_detect) {
                if (ev.predictions.empty()) throw ValidationError("detect needs --predictions");
                const auto metrics = detection_metrics(load_predictions(ev.predictions));
                const auto report = detection_report(metrics);
                if (!ev.out.empty()) write_text(ev.out, report.dump(2) + "\n");
                std::printf("precision %.4f\nrecall    %.4f\nF1        %.4f\n", metrics.precision, metrics.recall, metrics.f1);
                if (metrics.has_roc_auc()) {
                    std::printf("ROC AUC   %.4f\n", metrics.roc_auc());
                } else {
                    std::printf("ROC AUC   undefined (%s)\n", metrics.auc_undefined_reason().c_str());
                }
            } else {
                const auto mode = ev.variance_mode == "ratings" ? VarianceMode::ratings : VarianceMode::item_means;
                const auto report = ratings_report(load_ratings(ev.ratings), mode);
                if (!ev.out.empty()) write_text(ev.out, report.dump(2) + "\n");
                const auto table = *ev_icc ? ReportTable::icc : *ev_means ? ReportTable::means : ReportTable::variances;
                std::cout << render_table(report, table);
            }
        } else if (*serve_cmd) {
            const auto stub = std::make_shared<const StubBackend>(StubBackend::load(ss.fixture));
            std::shared_ptr<const RetrievalBackend> retrieval = stub;
            if (!ss.retrieval_corpus.empty()) {
                retrieval = std::make_shared<const LocalRetrievalBackend>(LocalRetrievalBackend::load(ss.retrieval_corpus));
            }
            httplib::Server server;
            server.Post(".*", [&](const httplib::Request& req, httplib::Response& res) {
                try {
                    const auto reply =
                        dispatch_request(nlohmann::json::parse(req.body), *stub, *retrieval, *stub, *stub, *stub, ss.model_id);
                    res.set_content(reply.dump(), "application/json");
                } catch (const std::exception& e) {
                    res.status = 400;
                    res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
                }
            });
            std::cerr << "listening on " << ss.host << ":" << ss.port << '\n';
            if (!server.listen(ss.host, ss.port)) throw IOError("cannot listen on " + ss.host + ":" + std::to_string(ss.port));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
