#include "ecgnet/error.hpp"
#include "ecgnet/model.hpp"
#include "ecgnet/sign_loss.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace ecgnet;

namespace {

SeResNetConfig tiny_config() {
    SeResNetConfig c;
    c.input_leads = 3;
    c.input_length = 64;
    c.stem_channels = 8;
    c.stem_kernel = 5;
    c.kernel_size = 3;
    c.blocks_per_stage = {2};
    c.channels_per_stage = {8};
    c.se_reduction = 4;
    c.seed = 17;
    return c;
}

// Parameter count written out layer by layer.
std::size_t expected_parameters(const SeResNetConfig& c) {
    std::size_t n = c.input_leads * c.stem_channels * c.stem_kernel;
    std::size_t in = c.stem_channels;
    for (std::size_t s = 0; s < c.channels_per_stage.size(); ++s) {
        for (std::size_t b = 0; b < c.blocks_per_stage[s]; ++b) {
            const std::size_t out = c.channels_per_stage[s];
            const std::size_t mid = out / c.se_reduction;
            n += 2 * in;                                  // bn1
            n += out * in * c.kernel_size;                // conv1
            n += 2 * out;                                 // bn2
            n += out * out * c.kernel_size;               // conv2
            n += out * mid + mid + mid * out + out;       // SE
            if (b == 0) n += out * in;                    // stage entry strides, so it projects
            in = out;
        }
    }
    n += 2 * in;                   // final bn
    n += in * c.n_classes + c.n_classes; // head
    return n;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("config validation and key=value round trip") {
    SeResNetConfig c;
    CHECK_NOTHROW(c.validate());
    c.se_reduction = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SeResNetConfig{};
    c.n_classes = 26;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SeResNetConfig{};
    c.blocks_per_stage = {2, 2};
    CHECK_THROWS_AS(c.validate(), ConfigError);

    const auto small = SeResNetConfig::small(512);
    const auto back = SeResNetConfig::from_key_values(small.to_key_values());
    CHECK(back.channels_per_stage == small.channels_per_stage);
    CHECK(back.blocks_per_stage == small.blocks_per_stage);
    CHECK(back.input_length == 512);
    CHECK_THROWS_AS(SeResNetConfig::from_key_values({{"depth", "9"}}), ConfigError);
    CHECK_THROWS_AS(SeResNetConfig::from_key_values({{"channels_per_stage", "8,x"}}), ConfigError);
}

TEST_CASE("parameter count is a pure function of the config") {
    SeResNetConfig c;
    c.input_length = 5000;
    SeResNet a(c);
    c.input_length = 15000;
    SeResNet b(c);
    CHECK(a.parameter_count() == b.parameter_count());
    CHECK(a.parameter_count() == expected_parameters(c));
    CHECK(a.parameter_count() == 2283019);

    const auto tiny = tiny_config();
    SeResNet t(tiny);
    CHECK(t.parameter_count() == expected_parameters(tiny));
}

TEST_CASE("forward shape contract") {
    Rng rng(1);
    SeResNet model(SeResNetConfig::small(256));
    const Tensor logits = model.forward(testing::random_tensor({2, 8, 256}, rng), Mode::train);
    CHECK(logits.shape() == std::vector<std::size_t>{2, 27});
    CHECK(logits.all_finite());
    CHECK_THROWS_AS(model.forward(Tensor({2, 8, 255}), Mode::eval), ShapeError);
    CHECK_THROWS_AS(model.forward(Tensor({2, 7, 256}), Mode::eval), ShapeError);
}

TEST_CASE("identical inputs give identical logits") {
    SeResNet model(SeResNetConfig::small(128));
    for (Mode mode : {Mode::train, Mode::eval}) {
        const Tensor logits = model.forward(Tensor({3, 8, 128}), mode);
        for (std::size_t i = 0; i < 27; ++i) {
            CHECK(logits.at(0, i) == logits.at(1, i));
            CHECK(logits.at(0, i) == logits.at(2, i));
        }
    }
}

TEST_CASE("forward is deterministic and batch-order equivariant") {
    Rng rng(2);
    const Tensor x = testing::random_tensor({3, 8, 128}, rng);
    Tensor swapped = x;
    const std::size_t row = 8 * 128;
    std::copy_n(x.data().begin(), row, swapped.data().begin() + 2 * row);
    std::copy_n(x.data().begin() + 2 * row, row, swapped.data().begin());
    for (Mode mode : {Mode::train, Mode::eval}) {
        SeResNet a(SeResNetConfig::small(128)), b(SeResNetConfig::small(128));
        const Tensor la = a.forward(x, mode);
        CHECK(la.storage() == b.forward(x, mode).storage());
        const Tensor ls = a.forward(swapped, mode);
        for (std::size_t i = 0; i < 27; ++i) {
            CHECK(ls.at(0, i) == doctest::Approx(la.at(2, i)).epsilon(1e-12));
            CHECK(ls.at(1, i) == doctest::Approx(la.at(1, i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("tiny model gradients match central differences") {
    Rng rng(3);
    SeResNet model(tiny_config());
    auto refs = model.refs();
    for (auto* p : refs.params)
        if (p->name.find("gamma") != std::string::npos)
            for (auto& v : p->value.data()) v = 1.0 + 0.2 * rng.normal();
    const Tensor x = testing::random_tensor({2, 3, 64}, rng);
    const Tensor logits = model.forward(x, Mode::train);
    const Tensor r = testing::random_tensor(logits.shape(), rng);
    model.zero_grad();
    model.backward(r);

    const auto objective = [&] { return testing::dot(model.forward(x, Mode::train), r); };
    std::size_t checked = 0, failed = 0;
    for (auto* p : refs.params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double fd = testing::central_difference(objective, p->value[i], 1e-5);
            const bool ok = testing::rel_err(p->grad[i], fd) < 1e-4 || std::abs(p->grad[i] - fd) < 1e-8;
            if (!ok) {
                ++failed;
                MESSAGE(p->name << "[" << i << "] analytic " << p->grad[i] << " numeric " << fd);
            }
            ++checked;
        }
    }
    CHECK(checked == model.parameter_count());
    CHECK(failed == 0);
}

TEST_CASE("tiny model gradients through the sign loss") {
    Rng rng(4);
    SeResNet model(tiny_config());
    const Tensor x = testing::random_tensor({2, 3, 64}, rng);
    Tensor targets({2, 27});
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = rng.bernoulli(0.2) ? 1.0 : 0.0;
    // Fresh logits sit near 0, i.e. p near the |y - p| = 0.5 jump; move them off it.
    model.refs().params.back()->value.fill(-2.0);

    model.zero_grad();
    model.backward(sign_loss_grad_logits(model.forward(x, Mode::train), targets));
    const auto objective = [&] {
        double total = 0.0;
        (void)sign_loss_grad_logits(model.forward(x, Mode::train), targets, &total);
        return total;
    };
    auto refs = model.refs();
    // The head and the stem bracket the whole network.
    for (auto* p : {refs.params.front(), refs.params.back(), refs.params[refs.params.size() - 2]}) {
        for (std::size_t i = 0; i < p->value.size(); i += 7) {
            const double fd = testing::central_difference(objective, p->value[i], 1e-5);
            CAPTURE(p->name);
            CHECK((testing::rel_err(p->grad[i], fd) < 1e-4 || std::abs(p->grad[i] - fd) < 1e-8));
        }
    }
}

TEST_CASE("a constant loss leaves every gradient at zero") {
    SeResNet model(tiny_config());
    Rng rng(5);
    (void)model.forward(testing::random_tensor({2, 3, 64}, rng), Mode::train);
    model.zero_grad();
    model.backward(Tensor({2, 27}));
    for (auto* p : model.refs().params)
        for (double g : p->grad.data()) CHECK(g == 0.0);
}

TEST_CASE("predict_probabilities returns sigmoid outputs") {
    SeResNet model(SeResNetConfig::small(128));
    Rng rng(6);
    const Tensor x = testing::random_tensor({2, 8, 128}, rng);
    const auto probs = predict_probabilities(model, x);
    const Tensor logits = model.forward(x, Mode::eval);
    REQUIRE(probs.size() == 2);
    for (std::size_t i = 0; i < 27; ++i) CHECK(probs[1][i] == sigmoid(logits.at(1, i)));
}

}
