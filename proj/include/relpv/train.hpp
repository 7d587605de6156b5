#pragma once

// Minimal reverse-mode training driver: SGD with classical or Nesterov
// momentum, step / plateau learning-rate schedules, an epoch loop with fixed
// batch order per seed, and CSV metrics. Two runs with identical inputs and
// seed produce bitwise-identical parameter trajectories and metrics.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "relpv/data_io.hpp"
#include "relpv/errors.hpp"
#include "relpv/network.hpp"
#include "relpv/rng.hpp"
#include "relpv/tensor_ops.hpp"

namespace relpv {

struct SgdConfig {
    double momentum = 0.9;
    bool nesterov = false;
};

template <typename T>
struct SgdState {
    std::vector<Tensor<T>> velocity;
};

// classical: v <- mu v - lr g;  p <- p + v
// nesterov:  v <- mu v - lr g;  p <- p + mu v - lr g
template <typename T>
void sgd_step(const std::vector<ParamRef<T>>& params, const std::vector<Tensor<T>>& grads,
              SgdState<T>& st, double lr, const SgdConfig& cfg) {
    if (params.size() != grads.size())
        throw DimensionError("sgd_step: " + std::to_string(params.size()) + " params vs " +
                             std::to_string(grads.size()) + " grads");
    if (lr <= 0.0) throw ParameterError("learning rate must be positive");
    if (st.velocity.empty()) {
        st.velocity.reserve(params.size());
        for (const auto& p : params) st.velocity.emplace_back(p.tensor->shape(), T(0));
    }
    const T mu = static_cast<T>(cfg.momentum);
    const T eta = static_cast<T>(lr);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& v = st.velocity[i];
        Tensor<T>& p = *params[i].tensor;
        const Tensor<T>& g = grads[i];
        if (!v.same_shape(g) || !p.same_shape(g))
            throw DimensionError("sgd_step: shape mismatch on " + params[i].name);
        for (std::size_t k = 0; k < v.size(); ++k) {
            v[k] = mu * v[k] - eta * g[k];
            p[k] += cfg.nesterov ? mu * v[k] - eta * g[k] : v[k];
        }
    }
}

enum class LrPolicy { Fixed, Step, Plateau };

struct LrSchedule {
    LrPolicy policy = LrPolicy::Fixed;
    double initial = 0.008;
    double factor = 0.5;  // multiplier applied on trigger; must be in (0, 1]
    int every = 4;        // Step: shrink after each `every` epochs
    int patience = 2;     // Plateau: epochs without val-loss improvement
};

// Tracks the learning rate across epochs; strictly positive, non-increasing.
class LrState {
public:
    explicit LrState(const LrSchedule& s) : sched_(s), lr_(s.initial) {
        if (s.initial <= 0.0) throw ParameterError("initial learning rate must be positive");
        if (s.factor <= 0.0 || s.factor > 1.0)
            throw ParameterError("lr decay factor must be in (0, 1]");
        if (s.policy == LrPolicy::Step && s.every < 1)
            throw ParameterError("step schedule needs every >= 1");
        if (s.policy == LrPolicy::Plateau && s.patience < 1)
            throw ParameterError("plateau schedule needs patience >= 1");
    }

    double lr() const { return lr_; }

    // Called once per finished epoch (1-based) with the epoch's val loss.
    void on_epoch_end(int epoch, double val_loss) {
        switch (sched_.policy) {
            case LrPolicy::Fixed:
                break;
            case LrPolicy::Step:
                if (epoch % sched_.every == 0) lr_ *= sched_.factor;
                break;
            case LrPolicy::Plateau:
                if (val_loss < best_ - 1e-12) {
                    best_ = val_loss;
                    since_ = 0;
                } else if (++since_ >= sched_.patience) {
                    lr_ *= sched_.factor;
                    since_ = 0;
                }
                break;
        }
    }

private:
    LrSchedule sched_;
    double lr_;
    double best_ = std::numeric_limits<double>::infinity();
    int since_ = 0;
};

struct EpochMetrics {
    int epoch = 0;  // 1-based
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

inline std::string metrics_csv_header() { return "epoch,lr,train_loss,train_acc,val_loss,val_acc"; }

inline std::string metrics_to_csv(const std::vector<EpochMetrics>& rows) {
    std::string out = metrics_csv_header() + "\n";
    char buf[192];
    for (const EpochMetrics& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.lr,
                      r.train_loss, r.train_acc, r.val_loss, r.val_acc);
        out += buf;
    }
    return out;
}

template <typename T>
struct EvalResult {
    double loss = 0.0;
    double acc = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

template <typename T>
EvalResult<T> evaluate(ModelInstance<T>& M, const LabeledDataset<T>& ds, std::size_t batch = 16) {
    if (ds.size() == 0) throw ParameterError("evaluate: empty dataset");
    EvalResult<T> res;
    const std::size_t K = static_cast<std::size_t>(M.classes());
    res.confusion.assign(K, std::vector<std::size_t>(K, 0));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t at = 0; at < ds.size(); at += batch) {
        const std::size_t B = std::min(batch, ds.size() - at);
        std::vector<const Tensor<T>*> xs(B);
        std::vector<int> ys(B);
        for (std::size_t b = 0; b < B; ++b) {
            xs[b] = &ds.samples[at + b];
            ys[b] = ds.labels[at + b];
        }
        Tensor<T> logits = forward_batch(M, xs, /*training=*/false);
        auto xe = softmax_crossentropy(logits, std::span<const int>(ys.data(), ys.size()));
        loss_sum += xe.loss * static_cast<double>(B);
        for (std::size_t b = 0; b < B; ++b) {
            std::size_t arg = 0;
            for (std::size_t k = 1; k < K; ++k)
                if (logits.at2(b, k) > logits.at2(b, arg)) arg = k;
            res.confusion[static_cast<std::size_t>(ys[b])][arg] += 1;
            if (arg == static_cast<std::size_t>(ys[b])) ++correct;
        }
    }
    res.loss = loss_sum / static_cast<double>(ds.size());
    res.acc = static_cast<double>(correct) / static_cast<double>(ds.size());
    return res;
}

struct TrainConfig {
    int epochs = 10;
    std::size_t batch = 16;
    SgdConfig sgd;
    LrSchedule schedule;
    std::uint64_t seed = 1;
};

// Runs `epochs` epochs of mini-batch SGD. Training metrics are accumulated
// from the same forward passes that drive the updates; validation metrics are
// computed at the end of each epoch. The recorded lr is the one used during
// the epoch. A non-finite loss aborts with a NumericError naming the epoch
// and batch.
template <typename T>
std::vector<EpochMetrics> train_loop(ModelInstance<T>& M, const LabeledDataset<T>& train,
                                     const LabeledDataset<T>& val, const TrainConfig& cfg,
                                     std::ostream* log = nullptr) {
    if (cfg.epochs < 0) throw ParameterError("epochs must be >= 0");
    if (cfg.batch < 1) throw ParameterError("batch size must be >= 1");
    if (train.size() == 0) throw ParameterError("train_loop: empty training set");
    auto params = M.parameters();
    SgdState<T> sgd;
    LrState lrs(cfg.schedule);
    Rng order_root(cfg.seed);
    std::vector<EpochMetrics> rows;
    const std::size_t K = static_cast<std::size_t>(M.classes());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng = order_root.child(static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        const double lr = lrs.lr();
        for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
            const std::size_t B = std::min(cfg.batch, order.size() - at);
            std::vector<const Tensor<T>*> xs(B);
            std::vector<int> ys(B);
            for (std::size_t b = 0; b < B; ++b) {
                xs[b] = &train.samples[order[at + b]];
                ys[b] = train.labels[order[at + b]];
            }
            BatchTape<T> tape;
            Tensor<T> logits = forward_batch(M, xs, /*training=*/true, &tape);
            auto xe = softmax_crossentropy(logits, std::span<const int>(ys.data(), ys.size()));
            if (!std::isfinite(xe.loss))
                throw NumericError("non-finite loss " + std::to_string(xe.loss) + " at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(at / cfg.batch) + " (lr=" + std::to_string(lr) +
                                   ")");
            loss_sum += xe.loss * static_cast<double>(B);
            for (std::size_t b = 0; b < B; ++b) {
                std::size_t arg = 0;
                for (std::size_t k = 1; k < K; ++k)
                    if (logits.at2(b, k) > logits.at2(b, arg)) arg = k;
                if (arg == static_cast<std::size_t>(ys[b])) ++correct;
            }
            std::vector<Tensor<T>> grads = backward_batch(M, tape, xe.grad);
            sgd_step(params, grads, sgd, lr, cfg.sgd);
        }

        EpochMetrics row;
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = loss_sum / static_cast<double>(train.size());
        row.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
        if (val.size() > 0) {
            EvalResult<T> ev = evaluate(M, val, cfg.batch);
            row.val_loss = ev.loss;
            row.val_acc = ev.acc;
        }
        rows.push_back(row);
        if (log) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "epoch %3d  lr %.5f  train %.4f/%.1f%%  val %.4f/%.1f%%\n", epoch, lr,
                          row.train_loss, 100.0 * row.train_acc, row.val_loss,
                          100.0 * row.val_acc);
            (*log) << buf << std::flush;
        }
        lrs.on_epoch_end(epoch, row.val_loss);
    }
    return rows;
}

}  // namespace relpv
