// Scratch experiment driver for tuning the acceptance tasks. Not installed.
#include <chrono>
#include <cstdio>

#include "ctxmt/bleu.hpp"
#include "ctxmt/train.hpp"
#include "ctxmt/translate.hpp"
#include "synthetic.hpp"

using namespace ctxmt;

static double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "overfit";
  double t0 = now_s();

  if (mode == "overfit" || mode == "joint") {
    synth::Corpus corpus = synth::overfit_corpus(11);
    synth::Prepared prep = synth::prepare(corpus);
    std::printf("src vocab %d tgt vocab %d, %zu train instances\n",
                prep.src_vocab.size(), prep.tgt_vocab.size(),
                prep.train.size());

    TransformerConfig cfg;
    cfg.d_model = 32;
    cfg.d_ff = 64;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.src_vocab = prep.src_vocab.size();
    cfg.tgt_vocab = prep.tgt_vocab.size();
    cfg.max_len = 32;
    cfg.dropout = 0.0;
    cfg.label_smoothing = 0.0;

    TrainOptions opts;
    opts.max_steps = argc > 2 ? std::atoi(argv[2]) : 400;
    opts.budget_tokens = 1024;
    opts.seed = 5;
    opts.schedule = LRSchedule{cfg.d_model, 200, 2.0};

    if (mode == "overfit") {
      NmtModel model(cfg, 17);
      TrainResult r = train_baseline(model, prep.train, {}, opts);
      std::printf("steps %lld final tgt loss %.4f (%.1fs)\n",
                  (long long)r.steps, *r.final_train.loss_tgt, now_s() - t0);
      // greedy accuracy
      int correct = 0, total = 0;
      DecodeOptions dopts{1, 32, 0.6};
      for (size_t i = 0; i < prep.train.size(); ++i) {
        const TrainingInstance& inst = prep.train[i];
        BeamResult res = translate(model, inst.cur_src, dopts);
        std::string out = detokenize_bpe(prep.tgt_vocab.decode(res.tokens));
        if (out == prep.train_tgt_text[i]) ++correct;
        ++total;
      }
      std::printf("greedy exact match %d/%d (%.1fs)\n", correct, total,
                  now_s() - t0);
    } else {
      JointModel model(cfg, 17);
      TrainResult r =
          train_joint_step1(model, prep.train, {}, JointLossWeights{0.5, 0.3},
                            JointMode::pre_next, true, opts);
      std::printf(
          "steps %lld tgt %.4f pre %.4f next %.4f joint %.4f (%.1fs) "
          "[ln(V)/2=%.3f]\n",
          (long long)r.steps, *r.final_train.loss_tgt, *r.final_train.loss_pre,
          *r.final_train.loss_next, r.final_train.joint, now_s() - t0,
          std::log((double)prep.src_vocab.size()) / 2);
    }
  }

  if (mode == "ctx") {
    synth::Corpus corpus = synth::context_corpus(21);
    synth::Prepared prep = synth::prepare(corpus);
    std::printf("src vocab %d tgt vocab %d train %zu dev %zu mono %zu\n",
                prep.src_vocab.size(), prep.tgt_vocab.size(),
                prep.train.size(), prep.dev.size(), prep.mono.size());
    TransformerConfig cfg;
    cfg.d_model = 32;
    cfg.d_ff = 64;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.src_vocab = prep.src_vocab.size();
    cfg.tgt_vocab = prep.tgt_vocab.size();
    cfg.max_len = 32;
    cfg.dropout = 0.0;
    cfg.label_smoothing = 0.0;

    TrainOptions opts;
    opts.max_steps = argc > 2 ? std::atoi(argv[2]) : 300;
    opts.budget_tokens = 1024;
    opts.seed = 5;
    opts.schedule = LRSchedule{cfg.d_model, 200, 2.0};

    // baseline floor on the ambiguous token
    NmtModel base(cfg, 31);
    TrainResult rb = train_baseline(base, prep.train, {}, opts);
    std::printf("baseline steps %lld loss %.4f (%.1fs)\n", (long long)rb.steps,
                *rb.final_train.loss_tgt, now_s() - t0);

    int amb_a = prep.tgt_vocab.id(synth::ambiguous_variant_a() +
                                  std::string(BPEModel::kEow));
    std::printf("variant token id=%d (vocab size %d)\n", amb_a,
                prep.tgt_vocab.size());

    // ambiguous-token loss for the baseline
    double total_nll = 0;
    int count = 0;
    for (const TrainingInstance& inst : prep.train) {
      if (!inst.prev_src) continue;
      Graph g(0);
      g.set_inference(true);
      NodeId mem = base.encode(g, inst.cur_src);
      NodeId logits = base.decode_logits(g, with_bos(*inst.tgt), mem);
      const Tensor& t = g.value(logits);
      int pos = 1;  // targets = [zda, T*, zdo, EOS]
      int target = (*inst.tgt)[1];
      const double* z = t.data.data() + (size_t)pos * t.cols();
      double m = z[0];
      for (int c = 1; c < t.cols(); ++c) m = std::max(m, z[c]);
      double sum = 0;
      for (int c = 0; c < t.cols(); ++c) sum += std::exp(z[c] - m);
      total_nll += -(z[target] - (m + std::log(sum)));
      ++count;
    }
    std::printf("baseline ambiguous-token loss %.4f over %d (ln2=%.4f)\n",
                total_nll / count, count, std::log(2.0));

    // pretrain then finetune
    TrainOptions popts = opts;
    popts.max_steps = argc > 3 ? std::atoi(argv[3]) : 200;
    PretrainModel pre(cfg, 41);
    TrainResult rp = train_pretrain(pre, prep.mono, {}, true, popts);
    std::printf("pretrain steps %lld pre %.4f next %.4f (%.1fs)\n",
                (long long)rp.steps, *rp.final_train.loss_pre,
                *rp.final_train.loss_next, now_s() - t0);
    Checkpoint ckpt = snapshot(pre.params(), "", rp.steps, 0, 0);

    for (bool from_pre : {true, false}) {
      FinetuneModel ft(cfg, FusionMode::sum_mean_pooled, true, 51);
      if (from_pre) init_finetune_from_pretrained(ft, ckpt);
      TrainOptions fopts = opts;
      fopts.eval_interval = 5;
      fopts.patience = 1000000;
      fopts.max_steps = argc > 2 ? std::atoi(argv[2]) : 300;
      TrainResult rf = train_finetune(ft, prep.train, prep.dev, fopts);
      int64_t step_to = -1;
      for (const EvalPoint& ep : rf.history) {
        if (ep.dev.loss_tgt && *ep.dev.loss_tgt <= 0.2) {
          step_to = ep.step;
          break;
        }
      }
      std::printf("finetune(from_pre=%d) steps %lld final %.4f dev-hit@%lld "
                  "(%.1fs)\n",
                  (int)from_pre, (long long)rf.steps, *rf.final_train.loss_tgt,
                  (long long)step_to, now_s() - t0);

      // ambiguous-token loss + greedy variant accuracy
      double nll = 0;
      int cnt = 0, correct = 0, tried = 0;
      for (const TrainingInstance& inst : prep.train) {
        if (!inst.prev_src) continue;
        Graph g(0);
        g.set_inference(true);
        NodeId mem = ft.encode_with_context(g, inst.cur_src, inst.prev_src,
                                            inst.next_src);
        NodeId logits = ft.decoder().decode(g, with_bos(*inst.tgt), mem);
        const Tensor& t = g.value(logits);
        int target = (*inst.tgt)[1];
        const double* z = t.data.data() + (size_t)1 * t.cols();
        double m = z[0];
        for (int c = 1; c < t.cols(); ++c) m = std::max(m, z[c]);
        double sum = 0;
        for (int c = 0; c < t.cols(); ++c) sum += std::exp(z[c] - m);
        nll += -(z[target] - (m + std::log(sum)));
        ++cnt;
        DecodeOptions dopts{1, 16, 0.6};
        BeamResult res = translate(ft, inst, dopts);
        if (res.tokens.size() > 1 && res.tokens[1] == target) ++correct;
        ++tried;
      }
      std::printf("  ambiguous loss %.4f, variant acc %d/%d\n", nll / cnt,
                  correct, tried);
    }
  }
  std::printf("total %.1fs\n", now_s() - t0);
  return 0;
}
