#include "hybridrag/generation.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <set>

#include "test_support.hpp"

using namespace hybridrag;
using testing_support::StubServer;
using testing_support::TempDir;

namespace {

const std::string kTemplateHead =
    "[INST] You are a precise and helpful assistant. When responding:\n"
    "- Provide a single, clear answer without repetition\n"
    "- Don't restate the question or context. DO NOT REPEAT THE PROMPT IN THE RESPONSE AND DO NOT WRITE ANY CODE.\n"
    "- Search if you can find the relevant answer in the provided context.\n"
    "- If uncertain, say \"The context doesn't provide sufficient information to answer the question\"\n"
    "- Avoid unnecessary formatting tokens in the response\n"
    "- Be direct and concise while maintaining a friendly tone, avoid long explanations\n"
    "- Only provide the answer to the question\n";

StubServer::Handler echo(const std::string& canned) {
  return [canned](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"choices", {{{"text", canned}}}}}.dump(), "application/json");
  };
}

GenerationConfig config_for(const StubServer& s) {
  GenerationConfig c;
  c.endpoint = s.url("/v1/completions");
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  return c;
}

struct SmallBatch {
  Corpus corpus{{Document{"d1", "Alpha text.", {}}, Document{"d2", "Beta text.", {}}, Document{"d3", "Gamma.", {}}}};
  std::vector<QueryRecord> records;
  RunFile run;

  SmallBatch() {
    for (int i = 1; i <= 5; ++i) {
      QueryRecord r;
      r.id = "q" + std::to_string(i);
      r.question = "Question " + std::to_string(i) + "?";
      r.doc_id = "d1";
      records.push_back(r);
      RankedList l;
      l.entries = {{"d" + std::to_string(1 + i % 3), 0.9}, {"d" + std::to_string(1 + (i + 1) % 3), 0.5}};
      run[r.id] = l;
    }
  }
};

}  // namespace

TEST(Prompt, TemplateIsVerbatim) {
  EXPECT_EQ(std::string(PromptTemplate::kDefaultInstructions), kTemplateHead);
  EXPECT_EQ(build_prompt("Q?", {"A"}), kTemplateHead + "Context: A\nQuestion: Q?\nAnswer: [/INST]");
}

TEST(Prompt, ContextsJoinedInRankOrder) {
  auto p = build_prompt("Q?", {"A", "B", "C"});
  EXPECT_NE(p.find("Context: A\n\nB\n\nC\nQuestion: Q?"), std::string::npos);
  EXPECT_EQ(p, build_prompt("Q?", {"A", "B", "C"}));
  EXPECT_EQ(p.substr(0, kTemplateHead.size()), kTemplateHead);
}

TEST(Prompt, EmptyContextsIsAnError) { EXPECT_THROW(build_prompt("Q?", {}), Error); }

TEST(GenerationConfig, DefaultsAndRequestBody) {
  GenerationConfig c;
  EXPECT_EQ(c.max_new_tokens, 8132u);
  EXPECT_DOUBLE_EQ(c.temperature, 0.8);
  EXPECT_DOUBLE_EQ(c.top_p, 0.9);
  EXPECT_EQ(c.retries, 2u);
  auto body = c.request_body("hi");
  EXPECT_EQ(body["prompt"], "hi");
  EXPECT_EQ(body["max_tokens"], 8132);
  c.chat_messages = true;
  EXPECT_EQ(c.request_body("hi")["messages"][0]["content"], "hi");
  c.top_p = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(GenerateAnswer, CannedEcho) {
  StubServer s("/v1/completions", echo("Paris"));
  auto a = generate_answer(config_for(s), "prompt", "q1", RetrieverKind::sparse);
  EXPECT_TRUE(a.ok);
  EXPECT_EQ(a.answer, "Paris");
  EXPECT_EQ(a.attempts, 1u);
  EXPECT_EQ(a.retriever_tag, RetrieverKind::sparse);
}

TEST(GenerateAnswer, ResponseShapes) {
  nlohmann::json shapes[] = {{{"choices", {{{"message", {{"content", "m"}}}}}}},
                             {{"text", "m"}},
                             {{"generated_text", "m"}},
                             {{"response", "m"}}};
  for (const auto& body : shapes) {
    StubServer s("/gen", [body](const httplib::Request&, httplib::Response& res) {
      res.set_content(body.dump(), "application/json");
    });
    auto c = config_for(s);
    c.endpoint = s.url("/gen");
    EXPECT_EQ(generate_answer(c, "p").answer, "m") << body.dump();
  }
}

TEST(GenerateAnswer, EndpointDownThreeAttemptsThenFailureRecord) {
  GenerationConfig c;
  c.endpoint = "http://127.0.0.1:1/v1/completions";
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(500);
  auto a = generate_answer(c, "p", "q");
  EXPECT_FALSE(a.ok);
  EXPECT_EQ(a.attempts, 3u);
  EXPECT_NE(a.error.find("transport"), std::string::npos);
}

TEST(GenerateAnswer, ServerErrorsRetriedExactlyRetriesPlusOne) {
  StubServer s("/v1/completions", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  auto a = generate_answer(config_for(s), "p");
  EXPECT_FALSE(a.ok);
  EXPECT_EQ(s.hits(), 3);
  EXPECT_EQ(a.attempts, 3u);
}

TEST(GenerateAnswer, RecoversAfterTransientError) {
  std::atomic<int> n{0};
  auto ok = echo("fine");
  StubServer s("/v1/completions", [&](const httplib::Request& q, httplib::Response& r) {
    if (n++ == 0) r.status = 429;
    else ok(q, r);
  });
  auto a = generate_answer(config_for(s), "p");
  EXPECT_TRUE(a.ok);
  EXPECT_EQ(a.attempts, 2u);
}

TEST(GenerateAnswer, ClientErrorIsNotRetried) {
  StubServer s("/v1/completions", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  auto a = generate_answer(config_for(s), "p");
  EXPECT_FALSE(a.ok);
  EXPECT_EQ(s.hits(), 1);
}

TEST(GenerateAnswer, MalformedResponseIsAnError) {
  StubServer s("/v1/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"unexpected": 1})", "application/json");
  });
  EXPECT_THROW(generate_answer(config_for(s), "p"), Error);
  StubServer t("/v1/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  EXPECT_THROW(generate_answer(config_for(t), "p"), Error);
}

TEST(Batch, OrderAlignedAndDeterministic) {
  SmallBatch b;
  StubServer s("/v1/completions", echo("canned"));
  TempDir dir;
  BatchOptions opts;
  opts.answers_path = dir.file("answers.jsonl");
  opts.provenance = {{"seed", 42}};
  auto first = run_generation_batch(b.records, b.run, b.corpus, config_for(s), opts);
  ASSERT_EQ(first.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(first[i].query_id, b.records[i].id);
    EXPECT_EQ(first[i].answer, "canned");
  }
  const auto bytes = testing_support::slurp(opts.answers_path);
  std::filesystem::remove(opts.answers_path);
  run_generation_batch(b.records, b.run, b.corpus, config_for(s), opts);
  EXPECT_EQ(testing_support::slurp(opts.answers_path), bytes);
  EXPECT_EQ(bytes.substr(0, bytes.find('\n')), R"({"provenance":{"seed":42}})");
}

TEST(Batch, ContextsFollowRunOrderAndCap) {
  SmallBatch b;
  std::mutex m;
  std::vector<std::string> prompts;
  StubServer s("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(m);
    prompts.push_back(nlohmann::json::parse(req.body)["prompt"]);
    res.set_content(R"({"text":"x"})", "application/json");
  });
  BatchOptions opts;
  opts.contexts_per_query = 1;
  auto out = run_generation_batch(b.records, b.run, b.corpus, config_for(s), opts);
  EXPECT_EQ(out[0].prompt, build_prompt("Question 1?", {"Beta text."}));
}

TEST(Batch, ResumesOnlyUnansweredQueries) {
  SmallBatch b;
  TempDir dir;
  BatchOptions opts;
  opts.answers_path = dir.file("answers.jsonl");
  {
    // Simulate an interrupted run: two answers on disk plus a torn line.
    std::ofstream out(opts.answers_path);
    for (const char* id : {"q2", "q4"}) {
      GeneratedAnswer a;
      a.query_id = id;
      a.ok = true;
      a.answer = "old";
      out << to_json(a).dump() << '\n';
    }
    out << "{\"query_id\": \"q5\", \"ans";
  }
  std::mutex m;
  std::multiset<std::string> asked;
  StubServer s("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(m);
    asked.insert(nlohmann::json::parse(req.body)["prompt"]);
    res.set_content(R"({"text":"new"})", "application/json");
  });
  auto out = run_generation_batch(b.records, b.run, b.corpus, config_for(s), opts);
  EXPECT_EQ(s.hits(), 3);
  EXPECT_EQ(out[1].answer, "old");
  EXPECT_EQ(out[3].answer, "old");
  EXPECT_EQ(out[0].answer, "new");
  EXPECT_EQ(out[4].answer, "new");
  EXPECT_EQ(read_answers(opts.answers_path).size(), 5u);
}

TEST(Batch, EmptyRetrievalIsARejectedRecord) {
  SmallBatch b;
  b.run["q3"].entries.clear();
  StubServer s("/v1/completions", echo("a"));
  auto out = run_generation_batch(b.records, b.run, b.corpus, config_for(s));
  EXPECT_FALSE(out[2].ok);
  EXPECT_EQ(out[2].error, "no retrieved context");
  EXPECT_EQ(s.hits(), 4);
}

TEST(Batch, MissingDocTextIsAnError) {
  SmallBatch b;
  b.run["q1"].entries[0].doc_id = "ghost";
  StubServer s("/v1/completions", echo("a"));
  EXPECT_THROW(run_generation_batch(b.records, b.run, b.corpus, config_for(s)), Error);
  EXPECT_EQ(s.hits(), 0);
  b = SmallBatch{};
  b.run.erase("q2");
  EXPECT_THROW(run_generation_batch(b.records, b.run, b.corpus, config_for(s)), Error);
}
