// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "ctxmt/checkpoint.hpp"
#include "ctxmt/ctxpretrain.hpp"
#include "ctxmt/error.hpp"
#include "ctxmt/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ctxmt;
using testutil::quad;
using testutil::tiny_config;

TEST_CASE("pre-training loss is the unit-weight sum of both components") {
  TransformerConfig cfg = tiny_config();
  PretrainModel model(cfg, 5);
  TrainingInstance triple = quad({1, 4}, {2, 5, 3}, {6}, {});

  Graph g;
  ComponentNodes nodes = model.forward(g, triple);
  REQUIRE(nodes.pre.has_value());
  REQUIRE(nodes.next.has_value());
  CHECK_FALSE(nodes.tgt.has_value());
  LossBreakdown bd = breakdown_from(g, nodes, 1.0, 1.0);
  CHECK(bd.joint == *bd.loss_pre + *bd.loss_next);

  SUBCASE("parallel instances are rejected") {
    Graph g2;
    TrainingInstance bad = quad({1}, {2}, {3}, {4});
    CHECK_THROWS_AS(model.forward(g2, bad), DataError);
  }
}

TEST_CASE("shared encoder mode feeds both decoders one memory") {
  TransformerConfig cfg = tiny_config();
  PretrainModel two(cfg, 6);
  PretrainModel shared_model(cfg, 6, EncoderMode::shared_encoder);
  TrainingInstance triple = quad({1, 4}, {2, 5, 3}, {6}, {});

  Graph g_two, g_shared;
  two.forward(g_two, triple);
  shared_model.forward(g_shared, triple);
  // the shared-mode graph runs one encoder pass fewer
  CHECK(g_shared.size() < g_two.size());

  // structurally: one encoder body less
  CHECK(param_count(two.params()).total -
            param_count(shared_model.params()).total ==
        encoder_body_param_count(cfg));
  CHECK(&shared_model.pre_encoder() == &shared_model.next_encoder());
}

TEST_CASE("fuse_context matches the pool-then-broadcast oracle") {
  Rng rng(19);
  Tensor cur = Tensor::zeros({4, 8});
  Tensor prev = Tensor::zeros({3, 8});
  Tensor next = Tensor::zeros({5, 8});
  for (Tensor* t : {&cur, &prev, &next}) {
    for (double& v : t->data) v = rng.uniform(-2, 2);
  }

  SUBCASE("both contexts absent: identity, bit-exact") {
    Graph g;
    NodeId c = g.constant(cur);
    NodeId out = fuse_context(g, c, std::nullopt, std::nullopt,
                              FusionMode::sum_mean_pooled);
    CHECK(out.v == c.v);
    CHECK(g.value(out).data == cur.data);
  }

  SUBCASE("identical context rows add their common vector to every row") {
    Tensor same = Tensor::zeros({3, 8});
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 8; ++c) same.at(r, c) = prev.at(0, c);
    }
    Graph g;
    NodeId out = fuse_context(g, g.constant(cur), g.constant(same),
                              std::nullopt, FusionMode::sum_mean_pooled);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 8; ++c) {
        CHECK(g.value(out).at(r, c) ==
              doctest::Approx(cur.at(r, c) + prev.at(0, c)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("random case agrees with the oracle within 1e-12") {
    Graph g;
    NodeId out = fuse_context(g, g.constant(cur), g.constant(prev),
                              g.constant(next), FusionMode::sum_mean_pooled);
    Tensor want = oracle::pool_broadcast_fuse(cur, &prev, &next);
    for (size_t i = 0; i < want.data.size(); ++i) {
      CHECK(std::fabs(g.value(out).data[i] - want.data[i]) < 1e-12);
    }
  }

  SUBCASE("context contributions are additive") {
    Graph g;
    NodeId both = fuse_context(g, g.constant(cur), g.constant(prev),
                               g.constant(next), FusionMode::sum_mean_pooled);
    NodeId prev_only = fuse_context(g, g.constant(cur), g.constant(prev),
                                    std::nullopt, FusionMode::sum_mean_pooled);
    NodeId next_only = fuse_context(g, g.constant(Tensor::zeros({4, 8})),
                                    std::nullopt, g.constant(next),
                                    FusionMode::sum_mean_pooled);
    for (size_t i = 0; i < cur.data.size(); ++i) {
      CHECK(std::fabs(g.value(both).data[i] - (g.value(prev_only).data[i] +
                                               g.value(next_only).data[i])) <
            1e-12);
    }
  }

  SUBCASE("embeddings_only returns the input unchanged") {
    Graph g;
    NodeId c = g.constant(cur);
    CHECK(fuse_context(g, c, g.constant(prev), g.constant(next),
                       FusionMode::embeddings_only)
              .v == c.v);
  }

  SUBCASE("dimension mismatch is rejected") {
    Graph g;
    CHECK_THROWS_AS(fuse_context(g, g.constant(cur),
                                 g.constant(Tensor::zeros({2, 4})),
                                 std::nullopt, FusionMode::sum_mean_pooled),
                    ShapeError);
  }

  SUBCASE("explicit_attention does not fuse at the input") {
    Graph g;
    CHECK_THROWS_AS(fuse_context(g, g.constant(cur), g.constant(prev),
                                 std::nullopt,
                                 FusionMode::explicit_attention),
                    Error);
  }
}

TEST_CASE("explicit context attention block") {
  TransformerConfig cfg = tiny_config();
  Rng rng(23);
  ParamStore store;
  AttentionWeights w = make_attention_weights(store, "blk", cfg.d_model, rng);
  LayerNormWeights ln = make_layer_norm_weights(store, "blk_norm",
                                                cfg.d_model);
  Tensor cur = Tensor::zeros({3, 8});
  Tensor ctx = Tensor::zeros({4, 8});
  for (Tensor* t : {&cur, &ctx}) {
    for (double& v : t->data) v = rng.uniform(-1, 1);
  }

  Graph g;
  NodeId out = explicit_context_attend(g, g.constant(cur), g.constant(ctx), w,
                                       ln, cfg.num_heads, 1e-6, 0.0);
  CHECK(g.value(out).rows() == 3);
  CHECK(g.value(out).cols() == 8);

  // equals layer_norm(cur + mha(cur, ctx, ctx)) built from the same pieces
  Graph g2;
  NodeId attended = multi_head_attention(g2, g2.constant(cur),
                                         g2.constant(ctx), g2.constant(ctx),
                                         AttentionMask::full(3, 4), w,
                                         cfg.num_heads);
  NodeId want = g2.layer_norm(g2.add(g2.constant(cur), attended),
                              g2.param(ln.gain->tensor),
                              g2.param(ln.bias->tensor), 1e-6);
  CHECK(g.value(out).data == g2.value(want).data);
}

TEST_CASE("finetune forward: fusion modes and sensitivity") {
  TransformerConfig cfg = tiny_config();
  FinetuneModel model(cfg, FusionMode::sum_mean_pooled, true, 41);
  TrainingInstance inst = quad({1, 4}, {2, 5, 3}, {6}, {7, 8});

  Graph g;
  ComponentNodes nodes = model.forward(g, inst);
  double base_loss = g.value(*nodes.tgt).data[0];
  CHECK(std::isfinite(base_loss));

  SUBCASE("perturbing the previous sentence changes the loss") {
    TrainingInstance other = inst;
    other.prev_src = std::vector<int>{9, 9};
    Graph g2;
    double other_loss = g2.value(*model.forward(g2, other).tgt).data[0];
    CHECK(other_loss != base_loss);
  }

  SUBCASE("absent contexts reduce to the plain encoder path") {
    TrainingInstance bare = inst;
    bare.prev_src.reset();
    bare.next_src.reset();
    Graph g3;
    double bare_loss = g3.value(*model.forward(g3, bare).tgt).data[0];
    // identical to running the nmt encoder directly on the current sentence
    Graph g4;
    NodeId memory = model.nmt_encoder().encode(g4, with_eos(bare.cur_src));
    NodeId loss = sequence_loss(g4, model.decoder(), memory, *bare.tgt,
                                cfg.label_smoothing);
    CHECK(bare_loss == g4.value(loss).data[0]);
  }

  SUBCASE("embeddings_only ignores contexts entirely") {
    FinetuneModel ablation(cfg, FusionMode::embeddings_only, true, 41);
    Graph ga, gb;
    TrainingInstance changed = inst;
    changed.prev_src = std::vector<int>{9, 9, 9};
    changed.next_src.reset();
    double la = ga.value(*ablation.forward(ga, inst).tgt).data[0];
    double lb = gb.value(*ablation.forward(gb, changed).tgt).data[0];
    CHECK(la == lb);
  }

  SUBCASE("explicit attention mode uses the placeholder for absent context") {
    FinetuneModel explicit_model(cfg, FusionMode::explicit_attention, true,
                                 41);
    TrainingInstance boundary = inst;
    boundary.prev_src.reset();
    Graph ge;
    double loss = ge.value(*explicit_model.forward(ge, boundary).tgt).data[0];
    CHECK(std::isfinite(loss));
    // and context changes still matter in this mode
    Graph gf;
    double loss2 =
        gf.value(*explicit_model.forward(gf, inst).tgt).data[0];
    CHECK(loss != loss2);
  }
}

TEST_CASE("frozen context encoders receive exactly zero gradients") {
  TransformerConfig cfg = tiny_config();
  FinetuneModel model(cfg, FusionMode::sum_mean_pooled, false, 43);
  TrainingInstance inst = quad({1, 4}, {2, 5, 3}, {6}, {7, 8});
  model.params().alloc_grads();
  model.params().zero_grads();
  Graph g;
  ComponentNodes nodes = model.forward(g, inst);
  g.backward(*nodes.tgt);
  double ctx_norm = 0, embed_norm = 0;
  for (const auto& p : model.params().list()) {
    double norm = 0;
    for (double gv : p->tensor.grad) norm += gv * gv;
    if (p->name.rfind("pre_encoder.", 0) == 0 ||
        p->name.rfind("next_encoder.", 0) == 0) {
      ctx_norm += norm;
    }
    if (p->name == "src_embed") embed_norm = norm;
  }
  CHECK(ctx_norm == 0.0);
  // the shared embeddings keep training
  CHECK(embed_norm > 0.0);
}

TEST_CASE("finetune parameter accounting") {
  TransformerConfig cfg = tiny_config();
  FinetuneModel model(cfg, FusionMode::sum_mean_pooled, true, 47);
  NmtModel baseline(cfg, 48);
  CHECK(param_count(model.params()).total ==
        param_count(baseline.params()).total +
            2 * encoder_body_param_count(cfg));
}

TEST_CASE("initializing the finetune model from a pre-training checkpoint") {
  TransformerConfig cfg = tiny_config();
  PretrainModel pre(cfg, 51);
  Checkpoint ckpt = snapshot(pre.params(), "", 100, 0, 0);

  FinetuneModel model(cfg, FusionMode::sum_mean_pooled, true, 52);
  std::vector<double> fresh_decoder =
      model.params().find("decoder.layer0.self_attn.wq")->tensor.data;
  std::vector<double> fresh_nmt_enc =
      model.params().find("encoder.layer0.self_attn.wq")->tensor.data;

  init_finetune_from_pretrained(model, ckpt);
  CHECK(model.from_pretrained());
  CHECK(model.src_embed()->tensor.data == pre.src_embed()->tensor.data);
  CHECK(model.params().find("pre_encoder.layer0.self_attn.wq")->tensor.data ==
        pre.params().find("pre_encoder.layer0.self_attn.wq")->tensor.data);
  CHECK(model.params().find("next_encoder.layer1.ff.w1")->tensor.data ==
        pre.params().find("next_encoder.layer1.ff.w1")->tensor.data);
  // the NMT encoder body and decoder keep their fresh initialization
  CHECK(model.params().find("decoder.layer0.self_attn.wq")->tensor.data ==
        fresh_decoder);
  CHECK(model.params().find("encoder.layer0.self_attn.wq")->tensor.data ==
        fresh_nmt_enc);

  SUBCASE("a shared-encoder checkpoint populates both context encoders") {
    PretrainModel shared(cfg, 53, EncoderMode::shared_encoder);
    Checkpoint sckpt = snapshot(shared.params(), "", 0, 0, 0);
    FinetuneModel m2(cfg, FusionMode::sum_mean_pooled, true, 54);
    init_finetune_from_pretrained(m2, sckpt);
    CHECK(m2.params().find("pre_encoder.layer0.self_attn.wq")->tensor.data ==
          m2.params().find("next_encoder.layer0.self_attn.wq")->tensor.data);
    CHECK(m2.params().find("pre_encoder.layer0.self_attn.wq")->tensor.data ==
          shared.params().find("encoder.layer0.self_attn.wq")->tensor.data);
  }
}
