#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include <json.hpp>

#include "naive_rem.hpp"
#include "remnet/gradcheck.hpp"
#include "remnet/rem.hpp"
#include "remnet/rng.hpp"

using namespace remnet;

namespace {

EvidenceMemory make_memory(Matrix e) {
  EvidenceMemory m;
  m.alive.assign(e.rows, 1);
  m.embeddings = std::move(e);
  return m;
}

EvidenceMemory random_memory(int I, int h, Rng& rng) {
  Matrix e(I, h);
  for (double& v : e.data) v = rng.uniform(-1.5, 1.5);
  return make_memory(std::move(e));
}

}  // namespace

TEST_CASE("residual_update") {
  EvidenceMemory mem = make_memory(Matrix(2, 2, {1, 0, 0, 1}));
  Vector q2 = residual_update(Vector({1, 0}), mem, Vector({0.7, 0.3}));
  CHECK(q2[0] == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(q2[1] == doctest::Approx(0.3).epsilon(1e-15));

  Vector same = residual_update(Vector({1, 0}), mem, Vector({0, 0}));
  CHECK(same[0] == 1.0);
  CHECK(same[1] == 0.0);

  EvidenceMemory mem2 = make_memory(Matrix(2, 2, {2, 5, -1, 4}));
  Vector onehot = residual_update(Vector({1, 1}), mem2, Vector({0, 1}));
  CHECK(onehot[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(onehot[1] == doctest::Approx(5.0).epsilon(1e-15));

  CHECK_THROWS_AS(residual_update(Vector({1, 0, 0}), mem, Vector({0.5, 0.5})), ShapeError);
}

TEST_CASE("erase by sorted scores") {
  Rng rng(1);
  EvidenceMemory mem = random_memory(4, 2, rng);
  auto [out, erased] = erase(Vector({0.4, 0.1, 0.3, 0.2}), mem, 2, 1);
  CHECK(erased == std::vector<int>{1, 3});
  CHECK(out.alive == std::vector<char>{1, 0, 1, 0});
  for (int j = 0; j < 2; ++j) {
    CHECK(out.embeddings.at(1, j) == 0.0);
    CHECK(out.embeddings.at(3, j) == 0.0);
  }

  auto [same, none] = erase(Vector({0.4, 0.1, 0.3, 0.2}), mem, 0, 1);
  CHECK(none.empty());
  CHECK(same.alive == mem.alive);

  // Both candidates tie at the threshold: the >= comparator keeps them.
  Rng rng2(2);
  EvidenceMemory mem3 = random_memory(3, 2, rng2);
  auto [keep, tie_erased] = erase(Vector({0.2, 0.2, 0.6}), mem3, 1, 1);
  CHECK(tie_erased.empty());
  CHECK(keep.alive == std::vector<char>{1, 1, 1});
}

TEST_CASE("erase respects min_survivors and clamps k") {
  Vector s({0.5, 0.3, 0.1, 0.05, 0.05});
  std::vector<char> alive(5, 1);
  // k bigger than erasable count: floor of 2 survivors
  std::vector<int> erased = select_erasures(s, alive, 10, 2);
  CHECK(static_cast<int>(erased.size()) <= 3);
  // lowest-ranked erased first
  std::set<int> es(erased.begin(), erased.end());
  CHECK(es.count(3) + es.count(4) == 2);

  // only alive slots considered
  alive = {1, 0, 1, 1, 1};
  erased = select_erasures(s, alive, 2, 1);
  for (int i : erased) CHECK(alive[i] == 1);
}

TEST_CASE("merge") {
  // T=0, identity W, zero bias -> q0
  MergeParams idp;
  idp.weight = Matrix(3, 3);
  for (int i = 0; i < 3; ++i) idp.weight.at(i, i) = 1.0;
  idp.bias = Vector(3);
  Vector m = merge({Vector({1, 2, 3})}, idp);
  for (int i = 0; i < 3; ++i) CHECK(m[i] == doctest::Approx(i + 1.0).epsilon(1e-15));

  MergeParams p2;
  p2.weight = Matrix(2, 1, {1, 1});
  p2.bias = Vector(1);
  Vector m2 = merge({Vector(std::vector<double>{2.0}), Vector(std::vector<double>{3.0})}, p2);
  CHECK(m2[0] == doctest::Approx(5.0).epsilon(1e-15));

  CHECK_THROWS_AS(merge({Vector(std::vector<double>{2.0})}, p2), ShapeError);
}

TEST_CASE("rem_forward matches naive reference") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    int heads = 1 + rng.uniform_int(2);
    int h = heads * (1 + rng.uniform_int(2));
    int I = 2 + rng.uniform_int(5);
    RemConfig cfg;
    cfg.steps = 1 + rng.uniform_int(3);
    cfg.erase_cap = rng.uniform_int(3);
    cfg.min_survivors = 1;
    cfg.head_count = heads;

    EvidenceMemory mem = random_memory(I, h, rng);
    Vector q0(h);
    for (int i = 0; i < h; ++i) q0[i] = rng.uniform(-1, 1);
    AttentionParams attn = init_attention(h, heads, rng);
    MergeParams mp = init_merge(h, cfg.steps, rng);

    auto [m, trace] = rem_forward(q0, mem, cfg, attn, mp);

    std::vector<std::vector<double>> evid(I, std::vector<double>(h));
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < h; ++j) evid[i][j] = mem.embeddings.at(i, j);
    naive::Result ref =
        naive::rem_reference(q0.data, evid, mem.alive, cfg, attn, mp);

    for (int j = 0; j < h; ++j)
      CHECK(std::fabs(m[j] - ref.merged[j]) < 1e-10);
    for (int t = 0; t < cfg.steps; ++t) {
      CHECK(trace.steps[t].erased == ref.step_erased[t]);
      for (int i = 0; i < I; ++i)
        CHECK(std::fabs(trace.steps[t].scores[i] - ref.step_scores[t][i]) < 1e-10);
    }
  }
}

TEST_CASE("k=0 leaves memory untouched") {
  Rng rng(5);
  RemConfig cfg{3, 0, 1, 1};
  EvidenceMemory mem = random_memory(6, 4, rng);
  Vector q0(4);
  for (int i = 0; i < 4; ++i) q0[i] = rng.uniform(-1, 1);
  AttentionParams attn = init_attention(4, 1, rng);
  MergeParams mp = init_merge(4, cfg.steps, rng);
  auto [m, trace] = rem_forward(q0, mem, cfg, attn, mp);
  for (const RemStepRecord& step : trace.steps) CHECK(step.erased.empty());
  CHECK(trace.final_alive.size() == 6);
}

TEST_CASE("erasure invariants over random runs") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    int heads = 1 + rng.uniform_int(2);
    int h = heads * 2;
    int I = 2 + rng.uniform_int(6);
    RemConfig cfg{1 + rng.uniform_int(3), rng.uniform_int(4), 1, heads};
    EvidenceMemory mem = random_memory(I, h, rng);
    Vector q0(h);
    for (int i = 0; i < h; ++i) q0[i] = rng.uniform(-1, 1);
    AttentionParams attn = init_attention(h, heads, rng);
    MergeParams mp = init_merge(h, cfg.steps, rng);
    auto [m, trace] = rem_forward(q0, mem, cfg, attn, mp);

    std::set<int> all_erased;
    std::set<int> dead;
    for (const RemStepRecord& step : trace.steps) {
      CHECK(static_cast<int>(step.erased.size()) <= cfg.erase_cap);
      for (int i : dead) CHECK(step.scores[i] == 0.0);
      for (int i : step.erased) {
        CHECK(all_erased.count(i) == 0);  // disjoint across steps
        all_erased.insert(i);
        dead.insert(i);
      }
    }
    CHECK(static_cast<int>(trace.final_alive.size()) >= cfg.min_survivors);
    CHECK(all_erased.size() + trace.final_alive.size() == static_cast<size_t>(I));

    // q^t - q^{t-1} equals E^T s for the step's memory
    Vector prev = trace.initial_query;
    EvidenceMemory cur = mem;
    for (const RemStepRecord& step : trace.steps) {
      Vector expect = residual_update(prev, cur, step.scores);
      for (int j = 0; j < h; ++j)
        CHECK(std::fabs(step.query[j] - expect[j]) < 1e-10);
      for (int i : step.erased) {
        cur.alive[i] = 0;
        for (int j = 0; j < h; ++j) cur.embeddings.at(i, j) = 0.0;
      }
      prev = step.query;
    }
  }
}

TEST_CASE("rem_forward gradient check with scalar readout") {
  Rng rng(13);
  int h = 4, I = 5, heads = 2;
  RemConfig cfg{2, 1, 1, heads};
  EvidenceMemory mem = random_memory(I, h, rng);
  Vector q0(h);
  for (int i = 0; i < h; ++i) q0[i] = rng.uniform(-1, 1);

  ParamStore store;
  int dk = h / heads;
  for (int a = 0; a < heads; ++a) {
    store.add("wq" + std::to_string(a), h, dk, rng);
    store.add("wk" + std::to_string(a), h, dk, rng);
  }
  store.add("wm", h * (cfg.steps + 1), h, rng);
  store.add("bm", 1, h, rng);

  auto f = [&](ParamStore& p, bool with_grad) {
    Tape t;
    Tape::Id q = t.leaf(q0.as_row());
    MemoryNode mn{t.leaf(mem.embeddings), mem.alive};
    RemNodes nodes;
    std::map<std::string, Tape::Id> bound;
    for (int a = 0; a < heads; ++a) {
      bound["wq" + std::to_string(a)] = t.leaf(p.get("wq" + std::to_string(a)));
      bound["wk" + std::to_string(a)] = t.leaf(p.get("wk" + std::to_string(a)));
      nodes.attention.query_proj.push_back(bound["wq" + std::to_string(a)]);
      nodes.attention.key_proj.push_back(bound["wk" + std::to_string(a)]);
    }
    bound["wm"] = t.leaf(p.get("wm"));
    bound["bm"] = t.leaf(p.get("bm"));
    nodes.merge_weight = bound["wm"];
    nodes.merge_bias = bound["bm"];
    RemResult r = rem_forward(t, q, mn, cfg, nodes);
    Tape::Id loss = t.sum(r.merged);
    if (with_grad) {
      t.backward(loss);
      for (auto& [name, id] : bound)
        for (size_t i = 0; i < p.grads.at(name).data.size(); ++i)
          p.grads.at(name).data[i] += t.grad(id).data[i];
    }
    return t.val(loss).data[0];
  };
  GradCheckReport report = check_gradients(f, store, 1e-5, 1e-4);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("trace serializes to the documented schema") {
  Rng rng(9);
  RemConfig cfg{2, 1, 1, 1};
  EvidenceMemory mem = random_memory(4, 2, rng);
  Vector q0(2);
  q0[0] = 0.3;
  q0[1] = -0.2;
  AttentionParams attn = init_attention(2, 1, rng);
  MergeParams mp = init_merge(2, cfg.steps, rng);
  auto [m, trace] = rem_forward(q0, mem, cfg, attn, mp);
  nlohmann::json j = nlohmann::json::parse(trace_to_json(trace));
  REQUIRE(j.contains("steps"));
  REQUIRE(j.contains("final_alive"));
  CHECK(j["steps"].size() == 2);
  for (auto& step : j["steps"]) {
    CHECK(step.contains("scores"));
    CHECK(step.contains("erased"));
    CHECK(step["scores"].size() == 4);
  }
}
