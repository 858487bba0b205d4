#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "sarcgen/backends.hpp"
#include "sarcgen/errors.hpp"
#include "support/fixtures.hpp"

using namespace sarcgen;

namespace {

StubBackend small_stub() {
    return StubBackend(nlohmann::json::parse(R"({
        "xeffect": {"my dog died .": ["is sad", "cries"]},
        "xeffect_fallback": ["gets tired", "is annoyed"],
        "retrieve": {"sad": ["i was sad ."]},
        "generate": {"I | is sad": "i am sad about it ."},
        "nli": {"a || b": [0.1, 0.2, 0.7]},
        "nli_default": [0.5, 0.3, 0.2],
        "emoji": {"hello": 3, "scored": [2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                         0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]}
    })"));
}

// Serves the stub through the wire contract, failing the first `failures`
// requests with HTTP 503.
class StubServer {
public:
    StubServer(int failures, int delay_ms = 0) : stub_(small_stub()), failures_(failures) {
        server_.Post(".*", [this, delay_ms](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            if (failures_-- > 0) {
                res.status = 503;
                return;
            }
            const auto reply = dispatch_request(nlohmann::json::parse(req.body), stub_, stub_, stub_, stub_, stub_, "stub");
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    RemoteConfig config(int retries, int timeout_ms = 2000) const {
        RemoteConfig c;
        c.url = "http://127.0.0.1:" + std::to_string(port_);
        c.retries = retries;
        c.timeout_ms = timeout_ms;
        return c;
    }
    std::atomic<int> requests{0};

private:
    StubBackend stub_;
    std::atomic<int> failures_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("stub serves fixture entries") {
    const auto stub = small_stub();
    CHECK(stub.xeffect("my dog died .") == std::vector<std::string>{"is sad", "cries"});
    CHECK(stub.retrieve("sad") == std::vector<std::string>{"i was sad ."});
    CHECK(stub.generate({"I", "is sad"}) == "i am sad about it .");
    CHECK(stub.nli("a", "b").contradiction == doctest::Approx(0.7));
    const auto scores = stub.emoji_scores("hello");
    REQUIRE(scores.size() == kEmojiCount);
    CHECK(scores[3] == 1.0);
    CHECK(stub.emoji_scores("scored")[0] == 2.0);
}

TEST_CASE("stub fallbacks are deterministic") {
    const auto stub = small_stub();
    const auto a = stub.xeffect("an unseen sentence");
    REQUIRE(a.size() == 1);
    CHECK(a == stub.xeffect("an unseen sentence"));
    CHECK(stub.retrieve("unseen").empty());
    CHECK(stub.generate({"we", "are late"}) == "we are late");
    CHECK(stub.nli("x", "y").entailment == doctest::Approx(0.5));

    const StubBackend bare(nlohmann::json::object());
    CHECK(bare.xeffect("x").empty());
    const auto n = bare.nli("p", "q");
    CHECK(n.entailment + n.neutral + n.contradiction == doctest::Approx(1.0));
    const auto e = bare.emoji_scores("anything");
    CHECK(std::count(e.begin(), e.end(), 1.0) == 1);
    CHECK(e[fnv1a("anything") % kEmojiCount] == 1.0);
}

TEST_CASE("fnv1a matches published values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("dispatch rejects unknown tasks") {
    const auto stub = small_stub();
    CHECK_THROWS_AS(dispatch_request({{"task", "summarize"}, {"inputs", nlohmann::json::object()}}, stub, stub, stub,
                                     stub, stub, "m"),
                    ValidationError);
    const auto reply = dispatch_request({{"task", "xeffect"}, {"inputs", {{"sentence", "my dog died ."}}}}, stub, stub,
                                        stub, stub, stub, "m");
    CHECK(reply["model_id"] == "m");
    CHECK(reply["outputs"]["phrases"][0] == "is sad");
}

TEST_CASE("remote client speaks the wire contract") {
    StubServer server(0);
    RemoteBackend remote(server.config(0));
    const auto stub = small_stub();
    CHECK(remote.xeffect("my dog died .") == stub.xeffect("my dog died ."));
    CHECK(remote.retrieve("sad") == stub.retrieve("sad"));
    CHECK(remote.generate({"I", "is sad"}) == "i am sad about it .");
    CHECK(remote.nli("a", "b").contradiction == doctest::Approx(0.7));
    CHECK(remote.emoji_scores("hello") == stub.emoji_scores("hello"));
}

TEST_CASE("remote client retries failures, then raises BackendError") {
    {
        StubServer server(2);
        RemoteBackend remote(server.config(2));
        CHECK(remote.retrieve("sad").size() == 1);
        CHECK(server.requests == 3);
    }
    {
        StubServer server(5);
        RemoteBackend remote(server.config(1));
        CHECK_THROWS_AS(remote.retrieve("sad"), BackendError);
        CHECK(server.requests == 2);
    }
}

TEST_CASE("remote client times out slow servers") {
    StubServer server(0, 400);
    RemoteBackend remote(server.config(0, 100));
    CHECK_THROWS_AS(remote.xeffect("my dog died ."), BackendError);
}

TEST_CASE("remote client reports refused connections") {
    RemoteConfig c;
    c.url = "http://127.0.0.1:1";
    c.retries = 0;
    c.timeout_ms = 200;
    CHECK_THROWS_AS(RemoteBackend(c).xeffect("x"), BackendError);
    CHECK_THROWS_AS(RemoteBackend(RemoteConfig{}), ValidationError);
}

TEST_CASE("shipped fixture suite loads every slot") {
    const auto dir = testing::source_path("data/fixtures");
    const auto suite = make_stub_suite(dir / "stub_backends.json", dir / "retrieval_corpus.json");
    CHECK(suite.commonsense);
    CHECK(suite.retrieval);
    CHECK(suite.generation);
    CHECK(suite.nli);
    CHECK(suite.emoji);
    CHECK_FALSE(suite.retrieval->retrieve("criticized").empty());
    CHECK_THROWS_AS(StubBackend::load("/nonexistent/stub.json"), IOError);
}
