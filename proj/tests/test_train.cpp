#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "relpv/checkpoint.hpp"
#include "relpv/cost_model.hpp"
#include "relpv/model_zoo.hpp"
#include "relpv/network.hpp"
#include "relpv/rng.hpp"
#include "relpv/train.hpp"

namespace fs = std::filesystem;
using namespace relpv;

namespace {

// relpv(3, f=2) -> maxpool -> flatten -> fc(3) -> softmax on 1x4x6x6 inputs
ModelSpec tiny_spec() {
    ModelSpec m;
    m.name = "tiny";
    m.input = {1, 4, 6, 6};
    m.classes = 3;
    int id = 0;
    m.layers.push_back(detail::relpv_layer(id++, 3, 2, 1, Padding::SameReplicate));
    m.layers.push_back(detail::pool_layer(id++, 2, 2));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Flatten));
    m.layers.push_back(detail::fc_layer(id++, 3));
    m.layers.push_back(detail::simple_layer(id++, LayerKind::Softmax));
    infer_shapes(m);
    return m;
}

// separable toy data: class c lights up a distinct spatial corner
LabeledDataset<double> toy_dataset(int per_class, std::uint64_t seed) {
    LabeledDataset<double> ds;
    ds.classes = 3;
    ds.sample_shape = {1, 4, 6, 6};
    ds.seed = seed;
    ds.generator = "toy";
    Rng rng(seed);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per_class; ++i) {
            Tensor<double> x(ds.sample_shape, 0.0);
            const std::size_t h0 = c == 0 ? 0 : (c == 1 ? 3 : 0);
            const std::size_t w0 = c == 2 ? 3 : 0;
            for (std::size_t d = 0; d < 4; ++d)
                for (std::size_t h = h0; h < h0 + 3; ++h)
                    for (std::size_t w = w0; w < w0 + 3; ++w)
                        x.at4(0, d, h, w) = 1.0 + 0.2 * rng.uniform(-1.0, 1.0) +
                                            0.5 * std::sin(static_cast<double>(d) + c);
            ds.samples.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    return ds;
}

}  // namespace

TEST_CASE("sgd step matches the closed-form update") {
    Tensor<double> p({1}, std::vector<double>{1.0});
    const std::vector<ParamRef<double>> params{{"p", &p}};
    const std::vector<Tensor<double>> grads{Tensor<double>({1}, std::vector<double>{0.5})};

    SECTION("classical momentum") {
        SgdState<double> st;
        SgdConfig cfg;  // momentum 0.9
        sgd_step(params, grads, st, 0.1, cfg);
        REQUIRE(p[0] == Catch::Approx(0.95).margin(1e-15));   // v = -0.05
        sgd_step(params, grads, st, 0.1, cfg);
        REQUIRE(p[0] == Catch::Approx(0.855).margin(1e-15));  // v = -0.095
    }
    SECTION("nesterov momentum") {
        SgdState<double> st;
        SgdConfig cfg;
        cfg.nesterov = true;
        sgd_step(params, grads, st, 0.1, cfg);
        REQUIRE(p[0] == Catch::Approx(0.905).margin(1e-15));   // p += mu v - lr g
        sgd_step(params, grads, st, 0.1, cfg);
        REQUIRE(p[0] == Catch::Approx(0.7695).margin(1e-15));
    }
    SECTION("validation") {
        SgdState<double> st;
        REQUIRE_THROWS_AS(sgd_step(params, grads, st, 0.0, SgdConfig{}), ParameterError);
        REQUIRE_THROWS_AS(sgd_step(params, grads, st, -1.0, SgdConfig{}), ParameterError);
        const std::vector<Tensor<double>> wrong{Tensor<double>({2})};
        REQUIRE_THROWS_AS(sgd_step(params, wrong, st, 0.1, SgdConfig{}), DimensionError);
    }
}

TEST_CASE("learning rate schedules") {
    SECTION("fixed") {
        LrSchedule s;
        s.policy = LrPolicy::Fixed;
        s.initial = 0.25;
        LrState st(s);
        for (int e = 1; e <= 5; ++e) {
            REQUIRE(st.lr() == 0.25);
            st.on_epoch_end(e, 1.0);
        }
    }
    SECTION("step halves every second epoch") {
        LrSchedule s;
        s.policy = LrPolicy::Step;
        s.initial = 1.0;
        s.factor = 0.5;
        s.every = 2;
        LrState st(s);
        const double want[] = {1.0, 1.0, 0.5, 0.5, 0.25};
        for (int e = 1; e <= 5; ++e) {
            REQUIRE(st.lr() == Catch::Approx(want[e - 1]).margin(1e-15));
            st.on_epoch_end(e, 1.0);
        }
    }
    SECTION("plateau waits for `patience` stale epochs") {
        LrSchedule s;
        s.policy = LrPolicy::Plateau;
        s.initial = 1.0;
        s.factor = 0.5;
        s.patience = 2;
        LrState st(s);
        const double losses[] = {1.0, 0.9, 0.95, 0.91, 0.93, 0.94};
        std::vector<double> seen;
        for (int e = 1; e <= 6; ++e) {
            seen.push_back(st.lr());
            st.on_epoch_end(e, losses[e - 1]);
        }
        // improvements at epochs 1-2; stale 3,4 -> decay; stale 5,6 -> decay
        REQUIRE(seen == std::vector<double>{1.0, 1.0, 1.0, 1.0, 0.5, 0.5});
        REQUIRE(st.lr() == Catch::Approx(0.25).margin(1e-15));
    }
    SECTION("validation") {
        LrSchedule s;
        s.initial = 0.0;
        REQUIRE_THROWS_AS(LrState(s), ParameterError);
        s.initial = 0.1;
        s.factor = 1.5;
        REQUIRE_THROWS_AS(LrState(s), ParameterError);
        s.factor = 0.5;
        s.policy = LrPolicy::Step;
        s.every = 0;
        REQUIRE_THROWS_AS(LrState(s), ParameterError);
    }
}

TEST_CASE("metrics serialize to a stable CSV") {
    REQUIRE(metrics_csv_header() == "epoch,lr,train_loss,train_acc,val_loss,val_acc");
    std::vector<EpochMetrics> rows(1);
    rows[0].epoch = 3;
    rows[0].lr = 0.008;
    rows[0].train_loss = 1.0 / 3.0;
    rows[0].train_acc = 0.5;
    rows[0].val_loss = 2.0;
    rows[0].val_acc = 0.25;
    const std::string csv = metrics_to_csv(rows);
    REQUIRE(csv ==
            "epoch,lr,train_loss,train_acc,val_loss,val_acc\n"
            "3,0.008,0.3333333333,0.5,2,0.25\n");
    REQUIRE(metrics_to_csv({}) == "epoch,lr,train_loss,train_acc,val_loss,val_acc\n");
}

TEST_CASE("evaluation counts, confusion matrix, and first-wins argmax") {
    ModelInstance<double> M(tiny_spec());
    M.init_params(1);
    // zero every parameter: all logits collapse to 0, so prediction is class 0
    for (const auto& p : M.parameters()) p.tensor->fill(0.0);
    const LabeledDataset<double> ds = toy_dataset(2, 3);  // labels 0,0,1,1,2,2
    const EvalResult<double> ev = evaluate(M, ds, 4);
    REQUIRE(ev.acc == Catch::Approx(2.0 / 6.0).margin(1e-12));
    REQUIRE(ev.loss == Catch::Approx(std::log(3.0)).margin(1e-9));
    for (int c = 0; c < 3; ++c) {
        REQUIRE(ev.confusion[static_cast<std::size_t>(c)][0] == 2);
        REQUIRE(ev.confusion[static_cast<std::size_t>(c)][1] == 0);
        REQUIRE(ev.confusion[static_cast<std::size_t>(c)][2] == 0);
    }
    LabeledDataset<double> empty;
    empty.classes = 3;
    REQUIRE_THROWS_AS(evaluate(M, empty), ParameterError);
}

TEST_CASE("training learns a separable toy problem deterministically") {
    const LabeledDataset<double> train = toy_dataset(8, 11);
    const LabeledDataset<double> val = toy_dataset(4, 12);

    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch = 6;
    cfg.schedule.initial = 0.05;
    cfg.seed = 5;

    ModelInstance<double> M(tiny_spec());
    M.init_params(2);
    const auto rows = train_loop(M, train, val, cfg);
    REQUIRE(rows.size() == 12);
    REQUIRE(rows.front().epoch == 1);
    REQUIRE(rows.back().epoch == 12);
    for (const auto& r : rows) {
        REQUIRE(std::isfinite(r.train_loss));
        REQUIRE(r.lr == Catch::Approx(0.05));
    }
    REQUIRE(rows.back().train_loss < rows.front().train_loss);
    REQUIRE(rows.back().train_acc >= 0.9);
    REQUIRE(rows.back().val_acc >= 0.9);

    // an identical run reproduces the metrics byte for byte
    ModelInstance<double> M2(tiny_spec());
    M2.init_params(2);
    const auto rows2 = train_loop(M2, train, val, cfg);
    REQUIRE(metrics_to_csv(rows) == metrics_to_csv(rows2));

    // and the final parameters as well
    auto pa = M.parameters();
    auto pb = M2.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pa[i].tensor->size(); ++j)
            REQUIRE((*pa[i].tensor)[j] == (*pb[i].tensor)[j]);
}

TEST_CASE("zero epochs leaves the model untouched and the log empty") {
    ModelInstance<double> M(tiny_spec());
    M.init_params(4);
    std::vector<double> before;
    for (const auto& p : M.parameters())
        for (std::size_t j = 0; j < p.tensor->size(); ++j) before.push_back((*p.tensor)[j]);

    TrainConfig cfg;
    cfg.epochs = 0;
    const LabeledDataset<double> train = toy_dataset(2, 1);
    const auto rows = train_loop(M, train, train, cfg);
    REQUIRE(rows.empty());

    std::size_t at = 0;
    for (const auto& p : M.parameters())
        for (std::size_t j = 0; j < p.tensor->size(); ++j) REQUIRE((*p.tensor)[j] == before[at++]);
}

TEST_CASE("a non-finite loss aborts with a diagnostic") {
    ModelInstance<double> M(tiny_spec());
    M.init_params(6);
    LabeledDataset<double> train = toy_dataset(2, 2);
    train.samples[0].fill(std::numeric_limits<double>::quiet_NaN());
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch = static_cast<std::size_t>(train.size());
    REQUIRE_THROWS_AS(train_loop(M, train, train, cfg), NumericError);
}

TEST_CASE("checkpoints round-trip bit exactly") {
    const fs::path dir = fs::temp_directory_path() / "relpv_test_ckpt";
    fs::remove_all(dir);

    ModelInstance<float> M(build_lp_mc3d(3, Scale::Desk));
    M.init_params(9);
    save_checkpoint(dir.string(), M);
    REQUIRE(fs::exists(dir / "manifest.txt"));
    REQUIRE(fs::exists(dir / "model.txt"));

    ModelInstance<float> L(load_model_file((dir / "model.txt").string()));
    L.init_params(10);  // different values, to prove the load overwrites them
    load_checkpoint(dir.string(), L);

    auto pm = M.state_tensors();
    auto pl = L.state_tensors();
    REQUIRE(pm.size() == pl.size());
    for (std::size_t i = 0; i < pm.size(); ++i) {
        REQUIRE(pm[i].name == pl[i].name);
        REQUIRE(pm[i].tensor->shape() == pl[i].tensor->shape());
        REQUIRE(std::memcmp(pm[i].tensor->data(), pl[i].tensor->data(),
                            pm[i].tensor->size() * sizeof(float)) == 0);
    }

    // strictness: a missing tensor file must be reported
    ModelInstance<double> D(build_lp_mc3d(3, Scale::Desk));
    REQUIRE_THROWS_AS(load_checkpoint(dir.string(), D), ParameterError);  // dtype f32 vs f64
    fs::remove_all(dir);
}

TEST_CASE("model description files reproduce the graph") {
    const fs::path dir = fs::temp_directory_path() / "relpv_test_model_file";
    fs::create_directories(dir);
    const ModelSpec m = build_lp3dcnn(Scale::Desk);
    save_model_file((dir / "m.txt").string(), m);
    const ModelSpec r = load_model_file((dir / "m.txt").string());
    REQUIRE(r.name == m.name);
    REQUIRE(r.input == m.input);
    REQUIRE(r.classes == m.classes);
    REQUIRE(r.layers.size() == m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        REQUIRE(r.layers[i].kind == m.layers[i].kind);
        REQUIRE(r.layers[i].from == m.layers[i].from);
        REQUIRE(r.layers[i].srcs == m.layers[i].srcs);
        REQUIRE(r.layers[i].n == m.layers[i].n);
        REQUIRE(r.layers[i].f == m.layers[i].f);
        REQUIRE(r.layers[i].units == m.layers[i].units);
        REQUIRE(r.layers[i].stride == m.layers[i].stride);
    }
    // counts computed from the reloaded spec agree
    REQUIRE(count_params(r) == count_params(m));
    fs::remove_all(dir);
}
