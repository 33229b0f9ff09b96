#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "apitag/errors.hpp"
#include "apitag/policy.hpp"
#include "test_util.hpp"

using namespace apitag;
using namespace apitag::testing;
using namespace std::chrono_literals;

namespace {

const Taxonomy& tx() {
  static Taxonomy t = Taxonomy::standard();
  return t;
}

const SynonymTable& syn() {
  static SynonymTable s = SynonymTable::standard();
  return s;
}

constexpr TimestampMs kNow = 10'000'000;

struct Fixture {
  HistoryStore history;
  PolicyConfig cfg;
  RequestContext rc;

  Fixture() {
    cfg.record_threshold = 100;
    cfg.max_purchase_qty = 10;
    cfg.login_attempt_limit = 5;
    cfg.cart_hold_limit = 10;
    cfg.registration_limit = 3;
    rc.ts = kNow;
    rc.src.client_ip = "10.0.0.5";
    rc.dest.key = CacheKey{"POST", "/purchase"};
    rc.hist = &history;
  }

  // Records the current request into history the way the pipeline does
  // before evaluation, then evaluates.
  Decision evaluate(const ParsedRequest& r, const PolicyChain& chain) {
    TagSet tags = oracle_tagger(r, tx(), syn());
    TagDetail detail = extract_tag_params(tags, r, syn(), tx());
    rc.dest.key = request_key(r);
    rc.dest.query_params = r.query_params;
    rc.src = extract_source_attributes(r);
    HistoryEntry entry{rc.ts, detail.tags.names(), detail.variables,
                       rc.group(cfg.group_by_forwarded)};
    history.record(rc.dest.key, entry);
    EvalContext ectx{rc, nullptr, cfg};
    return chain.evaluate(detail, ectx);
  }

  void seed(const CacheKey& key, TimestampMs ts, std::vector<std::string> tags,
            std::map<std::string, std::string> vars, std::string source = "10.0.0.5") {
    history.record(key, HistoryEntry{ts, std::move(tags), std::move(vars), std::move(source)});
  }
};

ParsedRequest purchase(long long qty, const std::string& product = "A1",
                       const std::string& peer = "10.0.0.5") {
  RawRequest spec;
  spec.method = "POST";
  spec.target = "/purchase";
  spec.body = "{\"quantity\":" + std::to_string(qty) + ",\"product_id\":\"" + product + "\"}";
  spec.content_type = "application/json";
  return make_request(spec, peer);
}

}  // namespace

TEST_CASE("None-tagged request passes the default chain untouched") {
  Fixture f;
  Decision d = f.evaluate(get("/static/logo.png"), PolicyChain::standard());
  CHECK(d.outcome == Outcome::Allow);
  CHECK_FALSE(d.deciding_policy.has_value());
  CHECK(d.trail == std::vector<std::string>{"PreTagPolicy", "PostTagPolicy"});
}

TEST_CASE("response size policy enforces the record threshold") {
  Fixture f;
  PolicyChain chain = PolicyChain::standard();

  SUBCASE("value under threshold allows") {
    Decision d = f.evaluate(get("/commentThreads?part=7&maxResults=30"), chain);
    CHECK(d.outcome == Outcome::Allow);
  }
  SUBCASE("paper attack value denies") {
    Decision d = f.evaluate(get("/query?numResults=100000"), chain);
    CHECK(d.outcome == Outcome::Deny);
    CHECK(*d.deciding_policy == "ResponseSize");
  }
  SUBCASE("strict less-than at the boundary") {
    CHECK(f.evaluate(get("/query?numResults=99"), chain).outcome == Outcome::Allow);
    Fixture g;
    CHECK(g.evaluate(get("/query?numResults=100"), chain).outcome == Outcome::Deny);
  }
  SUBCASE("missing parameter audits a demotion candidate") {
    TagSet tags = TagSet::of({tx().find(tags::kResponseDataLimit)->tag}, tx(), TagSource::LLM);
    ParsedRequest r = get("/items");
    TagDetail detail = extract_tag_params(tags, r, syn(), tx());
    EvalContext ectx{f.rc, nullptr, f.cfg};
    Decision d = chain.evaluate(detail, ectx);
    CHECK(d.outcome == Outcome::Audit);
    bool flagged = false;
    for (const auto& [flag, message] : d.reasons)
      if (flag == "TagDemotionCandidate") flagged = true;
    CHECK(flagged);
  }
  SUBCASE("unparseable value denies conservatively") {
    Decision d = f.evaluate(get("/query?numResults=banana"), chain);
    CHECK(d.outcome == Outcome::Deny);
  }
}

TEST_CASE("purchase policy: Listing-3 window semantics") {
  PolicyChain chain = PolicyChain::standard();

  SUBCASE("history 3+4 plus current 2 under max 10 allows") {
    Fixture f;
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 200000, {"PurchaseProduct"},
           {{"quantity", "3"}, {"product_id", "A1"}});
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 100000, {"PurchaseProduct"},
           {{"quantity", "4"}, {"product_id", "A1"}});
    Decision d = f.evaluate(purchase(2), chain);
    CHECK(d.outcome == Outcome::Allow);  // total 9 < 10
  }
  SUBCASE("strict <: total equal to max denies") {
    Fixture f;
    f.cfg.max_purchase_qty = 9;
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 200000, {"PurchaseProduct"},
           {{"quantity", "3"}, {"product_id", "A1"}});
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 100000, {"PurchaseProduct"},
           {{"quantity", "4"}, {"product_id", "A1"}});
    Decision d = f.evaluate(purchase(2), chain);
    CHECK(d.outcome == Outcome::Deny);  // total 9, max 9
    CHECK(*d.deciding_policy == "PurchaseProduct");
  }
  SUBCASE("entries older than the window drop out") {
    Fixture f;
    f.cfg.max_purchase_qty = 9;
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 6 * 60000, {"PurchaseProduct"},
           {{"quantity", "4"}, {"product_id", "A1"}});
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 100000, {"PurchaseProduct"},
           {{"quantity", "3"}, {"product_id", "A1"}});
    Decision d = f.evaluate(purchase(2), chain);
    CHECK(d.outcome == Outcome::Allow);  // only 3 in window, total 5
  }
  SUBCASE("other products do not count") {
    Fixture f;
    f.cfg.max_purchase_qty = 5;
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 1000, {"PurchaseProduct"},
           {{"quantity", "40"}, {"product_id", "B2"}});
    Decision d = f.evaluate(purchase(4), chain);
    CHECK(d.outcome == Outcome::Allow);
  }
  SUBCASE("unparseable quantity denies") {
    Fixture f;
    RawRequest spec;
    spec.method = "POST";
    spec.target = "/purchase";
    spec.body = R"({"quantity":"many","product_id":"A1"})";
    spec.content_type = "application/json";
    Decision d = f.evaluate(make_request(spec), chain);
    CHECK(d.outcome == Outcome::Deny);
  }
}

TEST_CASE("login policy: per-source window limit") {
  PolicyChain chain = PolicyChain::standard();
  RawRequest spec;
  spec.method = "POST";
  spec.target = "/login";
  spec.body = "user=u&password=p";
  spec.content_type = "application/x-www-form-urlencoded";

  SUBCASE("3 prior logins, limit 5 allows") {
    Fixture f;
    for (int i = 0; i < 3; ++i)
      f.seed(CacheKey{"POST", "/login"}, kNow - 1000 * (i + 1), {"Login"}, {}, "10.0.0.5");
    CHECK(f.evaluate(make_request(spec), chain).outcome == Outcome::Allow);
  }
  SUBCASE("5 prior logins, limit 5 denies") {
    Fixture f;
    for (int i = 0; i < 5; ++i)
      f.seed(CacheKey{"POST", "/login"}, kNow - 1000 * (i + 1), {"Login"}, {}, "10.0.0.5");
    Decision d = f.evaluate(make_request(spec), chain);
    CHECK(d.outcome == Outcome::Deny);
    CHECK(*d.deciding_policy == "Login");
  }
  SUBCASE("another source's attempts do not count") {
    Fixture f;
    for (int i = 0; i < 5; ++i)
      f.seed(CacheKey{"POST", "/login"}, kNow - 1000 * (i + 1), {"Login"}, {}, "9.9.9.9");
    CHECK(f.evaluate(make_request(spec), chain).outcome == Outcome::Allow);
  }
  SUBCASE("credentials in the URL raise PlaintextCredential") {
    Fixture f;
    Decision d = f.evaluate(get("/login?password=x"), chain);
    CHECK(d.outcome == Outcome::Audit);
    bool flagged = false;
    for (const auto& [flag, message] : d.reasons)
      if (flag == "PlaintextCredential") flagged = true;
    CHECK(flagged);
  }
}

TEST_CASE("add to cart policy: per product per source hold limit") {
  PolicyChain chain = PolicyChain::standard();
  auto cart = [&](long long qty, const std::string& peer = "10.0.0.5") {
    RawRequest spec;
    spec.method = "POST";
    spec.target = "/cart/items";
    spec.body = "{\"quantity\":" + std::to_string(qty) + ",\"product_id\":\"A1\"}";
    spec.content_type = "application/json";
    return make_request(spec, peer);
  };

  SUBCASE("sum 4 under limit 10 allows") {
    Fixture f;
    f.seed(CacheKey{"POST", "/cart/items"}, kNow - 1000, {"AddToCart"},
           {{"quantity", "2"}, {"product_id", "A1"}});
    CHECK(f.evaluate(cart(2), chain).outcome == Outcome::Allow);
  }
  SUBCASE("sum equal to limit denies") {
    Fixture f;
    f.seed(CacheKey{"POST", "/cart/items"}, kNow - 1000, {"AddToCart"},
           {{"quantity", "6"}, {"product_id", "A1"}});
    Decision d = f.evaluate(cart(4), chain);
    CHECK(d.outcome == Outcome::Deny);
    CHECK(*d.deciding_policy == "AddToCart");
  }
  SUBCASE("different sources aggregate separately") {
    Fixture f;
    f.seed(CacheKey{"POST", "/cart/items"}, kNow - 1000, {"AddToCart"},
           {{"quantity", "8"}, {"product_id", "A1"}}, "9.9.9.9");
    CHECK(f.evaluate(cart(4), chain).outcome == Outcome::Allow);
  }
}

TEST_CASE("registration policy") {
  PolicyChain chain = PolicyChain::standard();
  auto registration = [&](const std::string& peer = "10.0.0.5") {
    RawRequest spec;
    spec.method = "POST";
    spec.target = "/register";
    spec.body = R"({"username":"u","email":"u@example.com"})";
    spec.content_type = "application/json";
    return make_request(spec, peer);
  };

  SUBCASE("1 prior registration, limit 3 allows") {
    Fixture f;
    f.seed(CacheKey{"POST", "/register"}, kNow - 1000, {"UserRegistration"}, {}, "10.0.0.5");
    CHECK(f.evaluate(registration(), chain).outcome == Outcome::Allow);
  }
  SUBCASE("3 prior registrations, limit 3 denies") {
    Fixture f;
    for (int i = 0; i < 3; ++i)
      f.seed(CacheKey{"POST", "/register"}, kNow - 1000 * (i + 1), {"UserRegistration"}, {},
             "10.0.0.5");
    Decision d = f.evaluate(registration(), chain);
    CHECK(d.outcome == Outcome::Deny);
    CHECK(*d.deciding_policy == "Registration");
  }
  SUBCASE("empty registration denies") {
    Fixture f;
    RawRequest spec;
    spec.method = "POST";
    spec.target = "/register";
    spec.body = R"({"plan":"free"})";
    spec.content_type = "application/json";
    Decision d = f.evaluate(make_request(spec), chain);
    CHECK(d.outcome == Outcome::Deny);
  }
}

TEST_CASE("chain ordering and short-circuit") {
  Fixture f;
  PolicyChain chain;
  std::vector<std::string> called;
  chain.set_pre("PreTagPolicy", [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
    called.push_back("pre");
    return true;
  });
  chain.add_tag_handler(tags::kResponseDataLimit, "First",
                        [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
                          called.push_back("first");
                          return false;
                        });
  chain.add_tag_handler(tags::kResponseDataLimit, "Second",
                        [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
                          called.push_back("second");
                          return true;
                        });
  chain.set_post("PostTagPolicy", [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
    called.push_back("post");
    return true;
  });

  Decision d = f.evaluate(get("/query?numResults=5"), chain);
  CHECK(d.outcome == Outcome::Deny);
  CHECK(*d.deciding_policy == "First");
  CHECK(called == std::vector<std::string>{"pre", "first"});  // short-circuit
  CHECK(d.trail == std::vector<std::string>{"PreTagPolicy", "First"});
}

TEST_CASE("pre runs before tag handlers, post after") {
  Fixture f;
  PolicyChain chain;
  std::vector<std::string> called;
  chain.set_pre("PreTagPolicy", [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
    called.push_back("pre");
    return true;
  });
  chain.add_tag_handler(tags::kResponseDataLimit, "ResponseSize",
                        [&](const TagDetail& detail, const EvalContext& ctx, PolicyTrace& t) {
                          called.push_back("tag");
                          return response_size_policy(detail, ctx, t);
                        });
  chain.set_post("PostTagPolicy", [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
    called.push_back("post");
    return true;
  });
  Decision d = f.evaluate(get("/query?numResults=5"), chain);
  CHECK(d.outcome == Outcome::Allow);
  CHECK(called == std::vector<std::string>{"pre", "tag", "post"});
}

TEST_CASE("handlers only run for present tags; unknown tags have none") {
  Fixture f;
  PolicyChain chain = PolicyChain::standard();
  std::vector<std::string> called;
  chain.add_tag_handler("CustomTag", "CustomPolicy",
                        [&](const TagDetail&, const EvalContext&, PolicyTrace&) {
                          called.push_back("custom");
                          return true;
                        });
  Decision d = f.evaluate(get("/query?numResults=5"), chain);
  CHECK(d.outcome == Outcome::Allow);
  CHECK(called.empty());
  // Only the matching tag handler ran between pre and post.
  CHECK(d.trail ==
        std::vector<std::string>{"PreTagPolicy", "ResponseSize", "PostTagPolicy"});
}

TEST_CASE("policy panic isolation follows fail mode") {
  PolicyChain chain;
  chain.add_tag_handler(tags::kResponseDataLimit, "Exploder",
                        [](const TagDetail&, const EvalContext&, PolicyTrace&) -> bool {
                          throw std::runtime_error("boom");
                        });

  SUBCASE("fail open audits and continues") {
    Fixture f;
    f.cfg.fail_mode = FailMode::Open;
    Decision d = f.evaluate(get("/query?numResults=5"), chain);
    CHECK(d.outcome == Outcome::Audit);
    bool flagged = false;
    for (const auto& [flag, message] : d.reasons)
      if (flag == "PolicyPanic") flagged = true;
    CHECK(flagged);
  }
  SUBCASE("fail closed denies naming the policy") {
    Fixture f;
    f.cfg.fail_mode = FailMode::Closed;
    Decision d = f.evaluate(get("/query?numResults=5"), chain);
    CHECK(d.outcome == Outcome::Deny);
    CHECK(*d.deciding_policy == "Exploder");
  }
}

TEST_CASE("deny is monotone when thresholds tighten") {
  auto run_with = [&](long long threshold, long long max_qty) {
    Fixture f;
    f.cfg.record_threshold = threshold;
    f.cfg.max_purchase_qty = max_qty;
    f.seed(CacheKey{"POST", "/purchase"}, kNow - 1000, {"PurchaseProduct"},
           {{"quantity", "4"}, {"product_id", "A1"}});
    return f.evaluate(purchase(3), PolicyChain::standard()).outcome;
  };
  for (long long max_qty : {20, 12, 8, 7, 3, 1}) {
    Outcome loose = run_with(1000, max_qty + 5);
    Outcome tight = run_with(1000, max_qty);
    if (loose == Outcome::Deny) CHECK(tight == Outcome::Deny);
  }
}

TEST_CASE("decision invariants") {
  Fixture f;
  Decision d = f.evaluate(get("/query?numResults=100000"),
                          PolicyChain::standard());
  CHECK(d.outcome == Outcome::Deny);
  CHECK(d.deciding_policy.has_value());  // Deny implies a deciding policy
}

TEST_CASE("policy config validation") {
  HistoryRetention retention;
  PolicyConfig cfg;
  CHECK_NOTHROW(cfg.validate(retention));
  SUBCASE("non-positive threshold rejected") {
    cfg.record_threshold = 0;
    CHECK_THROWS_AS(cfg.validate(retention), ConfigError);
  }
  SUBCASE("window beyond retention rejected") {
    retention.max_age = std::chrono::minutes(2);
    CHECK_THROWS_AS(cfg.validate(retention), ConfigError);
  }
  SUBCASE("default purchase window is five minutes") {
    CHECK(cfg.purchase_window == 300s);
  }
}

TEST_CASE("threat coverage table is complete") {
  const std::set<std::string> expected = {
      "Server resource limit", "Denial of Inventory", "Scalping",
      "Spamming",              "Account registrations", "Card cracking",
      "Carding",               "Credential stuffing",   "Plaintext tokens"};
  std::set<std::string> covered;
  for (const ThreatCoverage& row : threat_coverage()) {
    CHECK_FALSE(row.mechanism.empty());
    covered.insert(row.intention);
  }
  CHECK(covered == expected);

  // Built-in names referenced by the table exist in the standard chain.
  std::vector<std::string> names = PolicyChain::standard().handler_names();
  std::set<std::string> handler_set(names.begin(), names.end());
  for (const char* builtin : {"ResponseSize", "PurchaseProduct", "Login", "AddToCart",
                              "Registration"})
    CHECK(handler_set.count(builtin) == 1);
}

TEST_CASE("custom policy example: commenting rate limit via count_by_tag") {
  // Spamming control documented in the threat table, built from the
  // windowed-count building block.
  PolicyChain chain = PolicyChain::standard();
  chain.add_tag_handler(tags::kCommenting, "CommentRate",
                        [](const TagDetail&, const EvalContext& ctx, PolicyTrace&) {
                          return ctx.prior_count(tags::kCommenting, 300s) < 2;
                        });
  auto comment = [&] {
    RawRequest spec;
    spec.method = "POST";
    spec.target = "/comments";
    spec.body = R"({"text":"spam spam"})";
    spec.content_type = "application/json";
    return make_request(spec);
  };
  Fixture f;
  CHECK(f.evaluate(comment(), chain).outcome == Outcome::Allow);
  CHECK(f.evaluate(comment(), chain).outcome == Outcome::Allow);
  Decision third = f.evaluate(comment(), chain);
  CHECK(third.outcome == Outcome::Deny);
  CHECK(*third.deciding_policy == "CommentRate");
}
