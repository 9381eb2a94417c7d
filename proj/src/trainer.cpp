#include "csf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

namespace csf {

namespace {

std::vector<double> normalized_context(const Sample& s) {
    return normalize(std::span<const double>(s.values), s.norm);
}

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

SampleLoss pretrain_sample(Tape& t, const Sample& sample, ModelParams& params, Var* total_out) {
    const std::vector<double> context = normalized_context(sample);
    PyramidResult fwd = forward_pyramid(t, context, params);
    if (fwd.maps.empty())
        throw LengthError("pretraining sample too short to activate any layer (T=" +
                          std::to_string(context.size()) + ")");
    PretrainLoss loss =
        pretrain_loss(t, fwd.maps, params, fwd.patches, fwd.sched, params.cfg.alpha);
    SampleLoss out;
    out.total = t.value(loss.total)(0, 0);
    out.recon = loss.recon_value;
    out.indep = loss.indep_value;
    if (total_out) *total_out = loss.total;
    return out;
}

double task_sample(Tape& t, const Sample& sample, ModelParams& params, TaskHeads& heads,
                   Var* loss_out) {
    const std::vector<double> context = normalized_context(sample);
    PyramidResult fwd = forward_pyramid(t, context, params);
    if (fwd.maps.empty())
        throw LengthError("sample too short to activate any layer (T=" +
                          std::to_string(context.size()) + ")");
    TaskHeads::HeadParams& head = select_head(fwd.sched, heads);
    Var out = head_affine(t, fwd.maps.back(), head);
    Var loss;
    if (heads.kind == TaskKind::forecast) {
        const std::vector<double> target_norm =
            normalize(std::span<const double>(sample.target), sample.norm);
        loss = t.l1_mean(out, Matrix::column(target_norm));
    } else {
        if (sample.label < 0) throw DataError("classification sample has no label");
        loss = t.cross_entropy_logits(out, sample.label);
    }
    if (loss_out) *loss_out = loss;
    return t.value(loss)(0, 0);
}

PretrainResult pretrain(ModelParams& params, const std::vector<Sample>& train,
                        const PretrainOptions& opt, const StepSink& on_step,
                        const StepSink& on_epoch) {
    if (train.empty()) throw DataError("pretrain: empty dataset");
    if (opt.batch < 1) throw ConfigError("pretrain: batch must be >= 1");
    if (opt.steps <= 0 && opt.epochs <= 0)
        throw ConfigError("pretrain: need steps > 0 or epochs > 0");

    const std::vector<Param*> plist = params.all_params();
    AdamW optimizer({opt.step_size, 0.9, 0.999, 1e-8, opt.weight_decay});
    Rng order_rng(Rng::derive(opt.seed, "pretrain-shuffle"));

    const int batches_per_epoch =
        static_cast<int>((train.size() + opt.batch - 1) / static_cast<size_t>(opt.batch));
    const int max_steps = opt.steps > 0 ? opt.steps : opt.epochs * batches_per_epoch;

    PretrainResult result;
    std::vector<size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), size_t{0});

    int step = 0, epoch = 0;
    while (step < max_steps) {
        ++epoch;
        shuffle_indices(idx, order_rng);
        StepRecord epoch_rec{epoch, 0.0, 0.0, 0.0};
        size_t epoch_samples = 0;
        for (size_t b = 0; b < idx.size() && step < max_steps; b += opt.batch) {
            const size_t hi = std::min(idx.size(), b + opt.batch);
            AdamW::zero_grad(plist);
            StepRecord rec{++step, 0.0, 0.0, 0.0};
            for (size_t i = b; i < hi; ++i) {
                Tape t;
                Var total;
                const SampleLoss sl = pretrain_sample(t, train[idx[i]], params, &total);
                t.backward(total);
                t.flush_param_grads();
                rec.l_total += sl.total;
                rec.l_recon += sl.recon;
                rec.l_indep += sl.indep;
            }
            const double count = static_cast<double>(hi - b);
            epoch_rec.l_total += rec.l_total;
            epoch_rec.l_recon += rec.l_recon;
            epoch_rec.l_indep += rec.l_indep;
            epoch_samples += hi - b;
            rec.l_total /= count;
            rec.l_recon /= count;
            rec.l_indep /= count;
            if (!std::isfinite(rec.l_total))
                throw NumericError("pretrain: non-finite loss at step " + std::to_string(rec.step));
            optimizer.step(plist);
            result.steps.push_back(rec);
            if (on_step) on_step(rec);
        }
        if (epoch_samples > 0) {
            epoch_rec.l_total /= static_cast<double>(epoch_samples);
            epoch_rec.l_recon /= static_cast<double>(epoch_samples);
            epoch_rec.l_indep /= static_cast<double>(epoch_samples);
            result.epochs.push_back(epoch_rec);
            if (on_epoch) on_epoch(epoch_rec);
        }
    }
    return result;
}

EpochMetrics evaluate(ModelParams& params, TaskHeads& heads, const std::vector<Sample>& samples,
                      const std::string& split_name) {
    if (samples.empty()) throw DataError("evaluate: empty split '" + split_name + "'");
    EpochMetrics m;
    m.split = split_name;
    if (heads.kind == TaskKind::forecast) {
        std::vector<double> all_pred, all_truth;
        for (const Sample& s : samples) {
            Tape t(false);
            const std::vector<double> context = normalized_context(s);
            PyramidResult fwd = forward_pyramid(t, context, params);
            TaskHeads::HeadParams& head = select_head(fwd.sched, heads);
            const std::vector<double> pred = forecast(t, fwd.maps.back(), head, s.norm);
            const std::vector<double> target_norm =
                normalize(std::span<const double>(s.target), s.norm);
            const std::vector<double> pred_norm =
                normalize(std::span<const double>(pred), s.norm);
            const ErrorMetrics em = error_metrics(pred_norm, target_norm);
            m.loss += em.mae;  // L1 objective on normalized scale
            all_pred.insert(all_pred.end(), pred.begin(), pred.end());
            all_truth.insert(all_truth.end(), s.target.begin(), s.target.end());
        }
        m.loss /= static_cast<double>(samples.size());
        const ErrorMetrics em = error_metrics(all_pred, all_truth);
        m.mse = em.mse;
        m.mae = em.mae;
    } else {
        std::vector<int> pred, truth;
        for (const Sample& s : samples) {
            Tape t(false);
            const std::vector<double> context = normalized_context(s);
            PyramidResult fwd = forward_pyramid(t, context, params);
            TaskHeads::HeadParams& head = select_head(fwd.sched, heads);
            Var logits = head_affine(t, fwd.maps.back(), head);
            m.loss += t.value(t.cross_entropy_logits(logits, s.label))(0, 0);
            const Matrix& z = t.value(logits);
            int best = 0;
            for (int c = 1; c < z.rows(); ++c)
                if (z(c, 0) > z(best, 0)) best = c;
            pred.push_back(best);
            truth.push_back(s.label);
        }
        m.loss /= static_cast<double>(samples.size());
        const ClassificationMetrics cm =
            classification_metrics(pred, truth, heads.output_dim);
        m.accuracy = cm.accuracy;
        m.macro_f1 = cm.macro_f1;
    }
    return m;
}

FinetuneResult finetune(ModelParams& params, TaskHeads& heads, const std::vector<Sample>& train,
                        const std::vector<Sample>& val, const FinetuneOptions& opt,
                        const EpochSink& on_epoch, const BestSink& on_best) {
    if (train.empty()) throw DataError("finetune: empty training set");
    if (opt.epochs < 1 || opt.batch < 1) throw ConfigError("finetune: epochs and batch must be >= 1");

    if (opt.freeze_backbone) params.set_trainable(false);
    std::vector<Param*> plist = params.all_params();
    for (Param* p : heads.all_params()) plist.push_back(p);

    AdamW optimizer({opt.step_size, 0.9, 0.999, 1e-8, opt.weight_decay});
    Rng order_rng(Rng::derive(opt.seed, "finetune-shuffle"));
    std::vector<size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), size_t{0});

    FinetuneResult result;
    const double t0 = now_seconds();
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        shuffle_indices(idx, order_rng);
        double train_loss = 0.0;
        for (size_t b = 0; b < idx.size(); b += opt.batch) {
            const size_t hi = std::min(idx.size(), b + opt.batch);
            AdamW::zero_grad(plist);
            for (size_t i = b; i < hi; ++i) {
                Tape t;
                Var loss;
                train_loss += task_sample(t, train[idx[i]], params, heads, &loss);
                t.backward(loss);
                t.flush_param_grads();
            }
            optimizer.step(plist);
        }
        train_loss /= static_cast<double>(train.size());
        if (!std::isfinite(train_loss))
            throw NumericError("finetune: non-finite loss at epoch " + std::to_string(epoch));

        EpochMetrics train_rec;
        train_rec.epoch = epoch;
        train_rec.split = "train";
        train_rec.loss = train_loss;
        train_rec.wall_time_s = now_seconds() - t0;
        result.trace.push_back(train_rec);
        if (on_epoch) on_epoch(train_rec);

        if (!val.empty()) {
            EpochMetrics val_rec = evaluate(params, heads, val, "val");
            val_rec.epoch = epoch;
            val_rec.wall_time_s = now_seconds() - t0;
            result.trace.push_back(val_rec);
            if (on_epoch) on_epoch(val_rec);
            const double score =
                heads.kind == TaskKind::forecast ? val_rec.mse : 1.0 - val_rec.accuracy;
            if (result.best_epoch < 0 || score < result.best_val) {
                result.best_epoch = epoch;
                result.best_val = score;
                if (on_best) on_best(epoch);
            }
        }
    }
    if (opt.freeze_backbone) params.set_trainable(true);
    return result;
}

RepresentationExtract extract_representation(ModelParams& params,
                                             const std::vector<Sample>& samples) {
    if (samples.size() < 2) throw DataError("representation extraction needs >= 2 samples");
    std::map<int, std::vector<std::vector<double>>> by_layer;
    for (const Sample& s : samples) {
        Tape t(false);
        const std::vector<double> context = normalize(std::span<const double>(s.values), s.norm);
        PyramidResult fwd = forward_pyramid(t, context, params);
        if (fwd.maps.empty()) continue;
        const Matrix& feat = t.value(fwd.maps.back().values);  // d^L x 1
        by_layer[fwd.sched.activated_layers].push_back(feat.vec());
    }
    if (by_layer.empty()) throw DataError("no sample activated any layer");
    // Deepest-layer features only have a common dimension within one length
    // interval; use the largest group.
    auto best = by_layer.begin();
    for (auto it = by_layer.begin(); it != by_layer.end(); ++it)
        if (it->second.size() > best->second.size()) best = it;
    RepresentationExtract out;
    out.layer = best->first;
    out.total_samples = static_cast<int>(samples.size());
    const auto& rows = best->second;
    out.rep = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            out.rep(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return out;
}

}  // namespace csf
