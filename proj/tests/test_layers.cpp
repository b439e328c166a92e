#include "ecgnet/error.hpp"
#include "ecgnet/layers.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace ecgnet;

namespace {

bool grad_close(double analytic, double numeric) {
    return testing::rel_err(analytic, numeric) < 1e-4 || std::abs(analytic - numeric) < 1e-8;
}

// Checks d<out, R>/d(params, input) against central differences, where R is
// a fixed random projection of the layer output.
void check_gradients(const std::function<Tensor(const Tensor&)>& forward,
                     const std::function<Tensor(const Tensor&)>& backward, std::vector<Param*> params, Tensor x,
                     std::uint64_t seed) {
    Rng rng(seed);
    const Tensor out = forward(x);
    const Tensor r = testing::random_tensor(out.shape(), rng);
    for (auto* p : params) p->zero_grad();
    const Tensor dx = backward(r);
    REQUIRE(dx.shape() == x.shape());

    const double h = 1e-5;
    const auto objective = [&] { return testing::dot(forward(x), r); };
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double fd = testing::central_difference(objective, p->value[i], h);
            CAPTURE(p->name);
            CAPTURE(i);
            CHECK(grad_close(p->grad[i], fd));
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = testing::central_difference(objective, x[i], h);
        CAPTURE(i);
        CHECK(grad_close(dx[i], fd));
    }
}

void randomize(Param& p, Rng& rng, double scale = 0.5, double offset = 0.0) {
    for (auto& v : p.value.data()) v = offset + scale * rng.normal();
}

} // namespace

TEST_SUITE("layers") {

TEST_CASE("tensor basics") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.at(1, 2) == 6);
    CHECK(t.shape_string() == "[2x3]");
    CHECK(shape_product({2, 3, 4}) == 24);
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    Tensor u({2, 3}, 1.0);
    t += u;
    CHECK(t[0] == 2);
    CHECK_THROWS_AS(t += Tensor({3, 2}), ShapeError);
    const std::vector<Tensor> items = {Tensor({2}, {1, 2}), Tensor({2}, {3, 4})};
    const auto s = Tensor::stack(items);
    CHECK(s.shape() == std::vector<std::size_t>{2, 2});
    CHECK(s.slice(1).storage() == std::vector<double>{3, 4});
    t[0] = std::nan("");
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv1d worked examples") {
    Conv1d ident("id", 1, 1, 1, 1, 0, false);
    ident.weight.value[0] = 1.0;
    const Tensor x({1, 1, 5}, {1, -2, 3, 0.5, 7});
    CHECK(ident.forward(x).storage() == x.storage());

    Conv1d box("box", 1, 1, 3, 1, 1, false);
    box.weight.value.fill(1.0);
    CHECK(box.forward(Tensor({1, 1, 3}, {1, 2, 3})).storage() == std::vector<double>{3, 6, 5});

    Conv1d down("down", 2, 3, 7, 2, 3, true);
    CHECK(down.output_length(64) == 32);
    CHECK(down.forward(Tensor({2, 2, 64})).shape() == std::vector<std::size_t>{2, 3, 32});
    CHECK(down.output_length(15) == 8);

    CHECK_THROWS_AS(box.forward(Tensor({1, 2, 3})), ShapeError);
    CHECK_THROWS_AS(box.forward(Tensor({2, 3})), ShapeError);
    CHECK_THROWS_AS(Conv1d("bad", 1, 1, 0, 1, 0, false), ConfigError);
}

TEST_CASE("conv1d gradients") {
    Rng rng(1);
    for (std::size_t stride : {1, 2}) {
        Conv1d conv("c", 3, 4, 5, stride, 2, true);
        conv.init_kaiming(rng);
        randomize(conv.bias, rng);
        std::vector<Param*> params = {&conv.weight, &conv.bias};
        check_gradients([&](const Tensor& x) { return conv.forward(x); },
                        [&](const Tensor& g) { return conv.backward(g); }, params,
                        testing::random_tensor({2, 3, 11}, rng), 100 + stride);
    }
}

TEST_CASE("batch norm normalizes per channel and tracks running statistics") {
    BatchNorm1d bn("bn", 2);
    Tensor x({2, 2, 3}, {1, 2, 3, 10, 10, 10, 4, 5, 6, 20, 20, 20});
    const Tensor y = bn.forward(x, Mode::train);
    double mean0 = 0.0;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < 3; ++t) mean0 += y.at(b, 0, t) / 6.0;
    CHECK(std::abs(mean0) < 1e-12);
    CHECK(bn.running_mean.value[0] == doctest::Approx(0.1 * 3.5));
    // Unbiased variance of {1..6} is 3.5.
    CHECK(bn.running_var.value[0] == doctest::Approx(0.9 + 0.1 * 3.5));
    const Tensor e = bn.forward(x, Mode::eval);
    CHECK(e.at(0, 0, 0) == doctest::Approx((1.0 - 0.35) / std::sqrt(1.25 + 1e-5)));
}

TEST_CASE("batch norm gradients in train and eval mode") {
    Rng rng(2);
    for (Mode mode : {Mode::train, Mode::eval}) {
        BatchNorm1d bn("bn", 3);
        randomize(bn.gamma, rng, 0.3, 1.0);
        randomize(bn.beta, rng);
        for (auto& v : bn.running_var.value.data()) v = rng.uniform(0.5, 2.0);
        check_gradients([&](const Tensor& x) { return bn.forward(x, mode); },
                        [&](const Tensor& g) { return bn.backward(g); }, {&bn.gamma, &bn.beta},
                        testing::random_tensor({3, 3, 5}, rng), 200);
    }
}

TEST_CASE("relu and pooling gradients") {
    Rng rng(3);
    Relu relu;
    check_gradients([&](const Tensor& x) { return relu.forward(x); }, [&](const Tensor& g) { return relu.backward(g); },
                    {}, testing::random_tensor({2, 3, 4}, rng), 300);
    GlobalAvgPool pool;
    const Tensor p = pool.forward(Tensor({1, 2, 4}, {1, 2, 3, 4, 0, 0, 0, 8}));
    CHECK(p.storage() == std::vector<double>{2.5, 2.0});
    check_gradients([&](const Tensor& x) { return pool.forward(x); }, [&](const Tensor& g) { return pool.backward(g); },
                    {}, testing::random_tensor({2, 3, 4}, rng), 301);
}

TEST_CASE("dense gradients") {
    Rng rng(4);
    Dense dense("d", 5, 3);
    dense.init_kaiming(rng);
    randomize(dense.bias, rng);
    check_gradients([&](const Tensor& x) { return dense.forward(x); }, [&](const Tensor& g) { return dense.backward(g); },
                    {&dense.weight, &dense.bias}, testing::random_tensor({4, 5}, rng), 400);
}

TEST_CASE("dense plus cross-entropy gives the logistic-regression gradient") {
    Rng rng(5);
    Dense dense("lr", 3, 1);
    dense.init_kaiming(rng);
    const Tensor x = testing::random_tensor({6, 3}, rng);
    const std::vector<double> y = {1, 0, 0, 1, 1, 0};
    const Tensor z = dense.forward(x);
    // Mean BCE of sigmoid(z); d/dz = (sigmoid(z) - y) / B.
    Tensor dz({6, 1});
    for (std::size_t b = 0; b < 6; ++b) dz[b] = (sigmoid(z[b]) - y[b]) / 6.0;
    dense.weight.zero_grad();
    dense.bias.zero_grad();
    dense.backward(dz);
    for (std::size_t j = 0; j < 3; ++j) {
        double closed = 0.0;
        for (std::size_t b = 0; b < 6; ++b) closed += (sigmoid(z[b]) - y[b]) * x.at(b, j) / 6.0;
        CHECK(dense.weight.grad[j] == doctest::Approx(closed).epsilon(1e-12));
    }
    double bias_closed = 0.0;
    for (std::size_t b = 0; b < 6; ++b) bias_closed += (sigmoid(z[b]) - y[b]) / 6.0;
    CHECK(dense.bias.grad[0] == doctest::Approx(bias_closed).epsilon(1e-12));
}

TEST_CASE("SE block with zero excitation halves the input") {
    SeBlock se("se", 8, 4);
    Rng rng(6);
    const Tensor x = testing::random_tensor({2, 8, 10}, rng);
    const Tensor y = se.forward(x);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(0.5 * x[i]));
}

TEST_CASE("SE block weights lie in (0, 1) and the squeeze is a channel mean") {
    SeBlock se("se", 2, 2);
    Rng rng(7);
    se.init(rng);
    Tensor x({1, 2, 4});
    for (std::size_t t = 0; t < 4; ++t) {
        x.at(0, 0, t) = static_cast<double>(t) + 1.0;
        x.at(0, 1, t) = 3.0 * x.at(0, 0, t);
    }
    (void)se.forward(x);
    CHECK(se.squeezed().at(0, 0) == doctest::Approx(2.5));
    CHECK(se.squeezed().at(0, 1) == doctest::Approx(7.5));

    SeBlock big("se", 16, 4);
    big.init(rng);
    (void)big.forward(testing::random_tensor({3, 16, 9}, rng, 3.0));
    for (double w : big.channel_weights().data()) {
        CHECK(w > 0.0);
        CHECK(w < 1.0);
    }
    CHECK_THROWS_AS(SeBlock("se", 6, 4), ConfigError);
}

TEST_CASE("SE block with a saturated gate is the identity") {
    SeBlock se("se", 4, 2);
    Rng rng(8);
    se.init(rng);
    se.expand.bias.value.fill(30.0);
    const Tensor x = testing::random_tensor({2, 4, 6}, rng);
    const Tensor y = se.forward(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-6);
}

TEST_CASE("SE block gradients") {
    Rng rng(9);
    SeBlock se("se", 4, 2);
    se.init(rng);
    randomize(se.reduce.bias, rng);
    randomize(se.expand.bias, rng);
    ParamRefs refs;
    se.collect(refs);
    check_gradients([&](const Tensor& x) { return se.forward(x); }, [&](const Tensor& g) { return se.backward(g); },
                    refs.params, testing::random_tensor({2, 4, 7}, rng), 900);
}

TEST_CASE("residual block gradients with and without projection") {
    Rng rng(10);
    struct Case {
        std::size_t in, out, stride;
    };
    for (const auto& c : {Case{4, 4, 1}, Case{4, 8, 2}}) {
        ResidualBlock block("blk", c.in, c.out, 3, c.stride, 2);
        block.init(rng);
        CHECK(block.projected == (c.in != c.out || c.stride != 1));
        ParamRefs refs;
        block.collect(refs);
        for (auto* p : refs.params)
            if (p->name.find("bn") != std::string::npos) randomize(*p, rng, 0.2, p->name.find("gamma") != std::string::npos);
        check_gradients([&](const Tensor& x) { return block.forward(x, Mode::train); },
                        [&](const Tensor& g) { return block.backward(g); }, refs.params,
                        testing::random_tensor({2, c.in, 8}, rng), 1000 + c.out);
    }
}

TEST_CASE("sigmoid is stable at the extremes") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(sigmoid(-40.0) > 0.0);
}

}
