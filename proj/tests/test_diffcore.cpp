#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "saal/graph.hpp"
#include "saal/optim.hpp"
#include "saal/rng.hpp"

using namespace saal;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Two-layer MLP loss graph with random parameters; exercises every primitive
// the model builder uses.
struct MlpFixture {
    ParameterStore params;
    ComputationGraph graph;
    Inputs inputs;
};

MlpFixture random_mlp(std::uint64_t seed, bool use_tanh, bool classification) {
    Rng rng(seed);
    const std::size_t batch = 3 + rng.next_below(3);
    const std::size_t din = 2 + rng.next_below(3);
    const std::size_t hidden = 2 + rng.next_below(4);
    const std::size_t dout = 2 + rng.next_below(3);

    MlpFixture f;
    f.params.add("w1", random_tensor(rng, {din, hidden}), Partition::shared_part());
    f.params.add("b1", random_tensor(rng, {1, hidden}), Partition::shared_part());
    f.params.add("w2", random_tensor(rng, {hidden, dout}), Partition::task_part(0));
    f.params.add("b2", random_tensor(rng, {1, dout}), Partition::task_part(0));

    ComputationGraph& g = f.graph;
    const int x = g.input("x");
    int h = g.add(g.matmul(x, g.param("w1")), g.param("b1"));
    h = use_tanh ? g.tanh(h) : g.relu(h);
    h = g.add(g.matmul(h, g.param("w2")), g.param("b2"));
    const int y = g.input("y");
    g.set_output(classification ? g.softmax_ce(h, y) : g.mse(h, y));

    f.inputs.emplace("x", random_tensor(rng, {batch, din}));
    if (classification) {
        Tensor onehot = Tensor::zeros({batch, dout});
        for (std::size_t i = 0; i < batch; ++i) {
            onehot[i * dout + rng.next_below(dout)] = 1.0;
        }
        f.inputs.emplace("y", onehot);
    } else {
        f.inputs.emplace("y", random_tensor(rng, {batch, dout}));
    }
    return f;
}

double max_abs_diff(const GradientMap& a, const GradientMap& b) {
    double worst = 0.0;
    for (const auto& [name, ga] : a) {
        const Tensor& gb = b.at(name);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            worst = std::max(worst, std::abs(ga[i] - gb[i]));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("tensor shape and finiteness invariants") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), dimension_error);
    CHECK_THROWS_AS(Tensor({0}, {}), dimension_error);
    CHECK_THROWS_AS(Tensor({1}, {std::nan("")}), numeric_error);
    CHECK_THROWS_AS(Tensor({2}, {1.0, INFINITY}), numeric_error);
    const Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.at(1, 2) == 6.0);
}

TEST_CASE("evaluate: identity graph returns its input") {
    ComputationGraph g;
    g.set_output(g.input("x"));
    const Tensor x({3}, {1.0, 2.0, 3.0});
    const Tensor out = evaluate(g, ParameterStore{}, {{"x", x}});
    CHECK(out == x);
}

TEST_CASE("evaluate: mse of a tensor with itself is zero") {
    ComputationGraph g;
    const int y = g.input("y");
    g.set_output(g.mse(y, y));
    const Tensor y_val({2, 2}, {0.5, -2.0, 7.0, 0.0});
    CHECK(evaluate(g, ParameterStore{}, {{"y", y_val}}).scalar_value() == 0.0);
}

TEST_CASE("evaluate: hand matmul") {
    ComputationGraph g;
    g.set_output(g.matmul(g.input("a"), g.input("b")));
    const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    const Tensor b = Tensor::matrix(2, 1, {1, 1});
    const Tensor out = evaluate(g, ParameterStore{}, {{"a", a}, {"b", b}});
    CHECK(out.shape() == std::vector<std::size_t>{2, 1});
    CHECK(out[0] == 3.0);
    CHECK(out[1] == 7.0);
}

TEST_CASE("evaluate: shape mismatch raises dimension_error") {
    ComputationGraph g;
    g.set_output(g.matmul(g.input("a"), g.input("b")));
    const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    const Tensor b = Tensor::matrix(2, 1, {1, 1});
    CHECK_THROWS_AS(evaluate(g, ParameterStore{}, {{"a", a}, {"b", b}}), dimension_error);
}

TEST_CASE("evaluate: non-finite intermediate raises numeric_error") {
    ParameterStore params;
    params.add("w", Tensor::scalar(1e308), Partition::shared_part());
    ComputationGraph g;
    g.set_output(g.scale(g.param("w"), 1e10));
    CHECK_THROWS_AS(evaluate(g, params, {}), numeric_error);
}

TEST_CASE("evaluate and backward are deterministic") {
    const MlpFixture f = random_mlp(7, true, false);
    const Tensor out1 = evaluate(f.graph, f.params, f.inputs);
    const Tensor out2 = evaluate(f.graph, f.params, f.inputs);
    CHECK(out1 == out2);
    const GradientMap g1 = backward(f.graph, f.params, f.inputs);
    const GradientMap g2 = backward(f.graph, f.params, f.inputs);
    CHECK(g1 == g2);
}

TEST_CASE("backward: constant loss has no parameter gradients") {
    ParameterStore params;
    params.add("w", Tensor::scalar(2.0), Partition::shared_part());
    ComputationGraph g;
    const int x = g.input("x");
    g.set_output(g.mse(x, x));  // constant zero, independent of w
    const GradientMap grads = backward(g, params, {{"x", Tensor::scalar(1.5)}});
    CHECK(grads.empty());
}

TEST_CASE("backward: linear loss 3w has gradient 3") {
    ParameterStore params;
    params.add("w", Tensor::scalar(4.0), Partition::shared_part());
    ComputationGraph g;
    g.set_output(g.scale(g.param("w"), 3.0));
    const GradientMap grads = backward(g, params, {});
    CHECK(grads.at("w")[0] == doctest::Approx(3.0));
}

TEST_CASE("backward: requires scalar output") {
    ParameterStore params;
    params.add("w", Tensor::matrix(1, 2, {1.0, 2.0}), Partition::shared_part());
    ComputationGraph g;
    g.set_output(g.scale(g.param("w"), 2.0));
    CHECK_THROWS_AS(backward(g, params, {}), contract_error);
}

TEST_CASE("backward matches numerical gradient on a random tanh MLP") {
    const MlpFixture f = random_mlp(42, true, false);
    const GradientMap analytic = backward(f.graph, f.params, f.inputs);
    const GradientMap numeric = numerical_gradient(f.graph, f.params, f.inputs, 1e-5);
    CHECK(analytic.size() == numeric.size());
    CHECK(max_abs_diff(analytic, numeric) < 1e-6);
}

TEST_CASE("autodiff oracle property: 30 random MLPs within 1e-6") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const bool use_tanh = seed % 2 == 0;
        const bool classification = seed % 3 == 0;
        const MlpFixture f = random_mlp(1000 + seed, use_tanh, classification);
        const GradientMap analytic = backward(f.graph, f.params, f.inputs);
        const GradientMap numeric = numerical_gradient(f.graph, f.params, f.inputs, 1e-5);
        REQUIRE(analytic.size() == numeric.size());
        CHECK(max_abs_diff(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("sum and relu primitives differentiate correctly") {
    ParameterStore params;
    params.add("w", Tensor::matrix(1, 3, {-1.0, 0.5, 2.0}), Partition::shared_part());
    ComputationGraph g;
    g.set_output(g.sum(g.relu(g.param("w"))));
    const GradientMap analytic = backward(g, params, {});
    const GradientMap numeric = numerical_gradient(g, params, {}, 1e-6);
    CHECK(analytic.at("w")[0] == 0.0);  // negative side of the kink
    CHECK(analytic.at("w")[1] == 1.0);
    CHECK(analytic.at("w")[2] == 1.0);
    CHECK(max_abs_diff(analytic, numeric) < 1e-6);
}

TEST_CASE("numerical_gradient: quadratic and constant cases") {
    ParameterStore params;
    params.add("w", Tensor::scalar(3.0), Partition::shared_part());

    ComputationGraph quad;
    quad.set_output(quad.mse(quad.param("w"), quad.input("zero")));
    const GradientMap g =
        numerical_gradient(quad, params, {{"zero", Tensor::scalar(0.0)}}, 1e-5);
    CHECK(g.at("w")[0] == doctest::Approx(6.0).epsilon(1e-6));

    ComputationGraph constant;
    const int w = constant.param("w");
    constant.set_output(constant.scale(w, 0.0));
    const GradientMap gz = numerical_gradient(constant, params, {}, 1e-5);
    CHECK(gz.at("w")[0] == doctest::Approx(0.0));

    CHECK_THROWS_AS(numerical_gradient(constant, params, {}, 0.0), contract_error);
}

TEST_CASE("sgd_step: basic update and absence semantics") {
    ParameterStore params;
    params.add("a", Tensor::scalar(1.0), Partition::task_part(0));
    params.add("b", Tensor::scalar(2.0), Partition::task_part(1));
    GradientMap grads;
    grads.emplace("a", Tensor::scalar(0.5));
    sgd_step(params, grads, 0.1);
    CHECK(params.at("a")[0] == doctest::Approx(0.95));
    CHECK(params.at("b")[0] == 2.0);  // untouched, bit-identical

    GradientMap zero;
    zero.emplace("a", Tensor::scalar(0.0));
    const double before = params.at("a")[0];
    sgd_step(params, zero, 0.1);
    CHECK(params.at("a")[0] == before);

    GradientMap bad;
    bad.emplace("a", Tensor::matrix(1, 2, {1.0, 1.0}));
    CHECK_THROWS_AS(sgd_step(params, bad, 0.1), dimension_error);
}

TEST_CASE("adam_step: zero gradient leaves parameters unchanged") {
    ParameterStore params;
    params.add("p", Tensor::scalar(1.25), Partition::shared_part());
    AdamState state;
    GradientMap grads;
    grads.emplace("p", Tensor::scalar(0.0));
    adam_step(params, grads, state, AdamConfig{});
    CHECK(params.at("p")[0] == 1.25);
    CHECK(state.step == 1);
}

TEST_CASE("adam_step: first step with unit gradient moves by about lr") {
    ParameterStore params;
    params.add("p", Tensor::scalar(0.0), Partition::shared_part());
    AdamState state;
    AdamConfig cfg;
    cfg.lr = 1e-3;
    GradientMap grads;
    grads.emplace("p", Tensor::scalar(1.0));
    adam_step(params, grads, state, cfg);
    CHECK(params.at("p")[0] == doctest::Approx(-cfg.lr).epsilon(1e-6));
}

TEST_CASE("adam_step: converges on a 1-D quadratic") {
    // minimise p^2: gradient 2p, minimum at 0
    ParameterStore params;
    params.add("p", Tensor::scalar(5.0), Partition::shared_part());
    AdamState state;
    AdamConfig cfg;
    cfg.lr = 1e-2;
    for (int i = 0; i < 2000; ++i) {
        GradientMap grads;
        grads.emplace("p", Tensor::scalar(2.0 * params.at("p")[0]));
        adam_step(params, grads, state, cfg);
    }
    CHECK(std::abs(params.at("p")[0]) < 1e-3);
}

TEST_CASE("cosine_lr endpoints and midpoint") {
    CHECK(cosine_lr(0, 10, 0.1) == doctest::Approx(0.1));
    CHECK(cosine_lr(10, 10, 0.1) == doctest::Approx(0.0));
    CHECK(cosine_lr(5, 10, 0.1) == doctest::Approx(0.05));
    CHECK_THROWS_AS(cosine_lr(0, 0, 0.1), config_error);
    CHECK_THROWS_AS(cosine_lr(11, 10, 0.1), contract_error);
}

TEST_CASE("partition labels round-trip") {
    for (const Partition& p : {Partition::shared_part(), Partition::task_part(3),
                               Partition::self_aux_part(1, 2)}) {
        CHECK(Partition::from_label(p.label()) == p);
    }
    CHECK_THROWS_AS(Partition::from_label("bogus"), parse_error);
}
