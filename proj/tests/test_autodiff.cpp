#include <doctest.h>

#include <cmath>
#include <functional>

#include "dcpa/autodiff.hpp"
#include "dcpa/losses.hpp"
#include "dcpa/rng.hpp"

using namespace dcpa;

namespace {

using DTensor = TensorT<double>;
using DNode = NodeTPtr<double>;

DTensor random_dtensor(Shape shape, Rng& rng, double scale = 1.0) {
    DTensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * (2.0 * rng.next_real01() - 1.0);
    return t;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Scalarizes the op output with fixed random weights, then compares the
// reverse-mode gradients of every input against central differences.
void gradcheck(std::vector<DTensor*> inputs, const std::function<DNode(const std::vector<DNode>&)>& build,
               Rng& rng, double tol = 1e-6) {
    auto eval = [&]() {
        std::vector<DNode> leaves;
        for (DTensor* t : inputs) leaves.push_back(make_leaf(*t, true));
        return build(leaves);
    };
    DNode probe = eval();
    DTensor weights = random_dtensor(probe->value().shape(), rng);
    auto scalarize = [&](DNode node) { return weighted_sum(std::move(node), weights); };

    std::vector<DNode> leaves;
    for (DTensor* t : inputs) leaves.push_back(make_leaf(*t, true));
    DNode root = scalarize(build(leaves));
    backward(root);

    const auto fd = finite_diff_grad<double>([&]() { return scalarize(eval())->scalar(); }, inputs, 1e-5);
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        const auto got = leaves[p]->grad_tensor();
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(rel_err(got[i], fd[p][i]) < tol);
        }
    }
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("backward: sum(x) gives all-ones gradient") {
    Rng rng(1);
    DTensor x = random_dtensor({2, 3, 3}, rng);
    auto leaf = make_leaf(x, true);
    backward(sum_all(leaf));
    for (double g : leaf->grad()) CHECK(g == 1.0);
}

TEST_CASE("backward: sum(x*x) gives 2x") {
    Rng rng(2);
    DTensor x = random_dtensor({1, 4, 4}, rng);
    auto leaf = make_leaf(x, true);
    backward(sum_squares(leaf));
    const auto g = leaf->grad_tensor();
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 * x[i]));
}

TEST_CASE("backward: repeated use accumulates additively") {
    DTensor x({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    auto leaf = make_leaf(x, true);
    // concat(x, x) doubles every element's contribution
    backward(sum_all(concat_channels(leaf, leaf)));
    for (double g : leaf->grad()) CHECK(g == 2.0);
}

TEST_CASE("backward rejects non-scalar roots") {
    auto leaf = make_leaf(DTensor({1, 2, 2}), true);
    CHECK_THROWS_AS(backward(relu(leaf)), ShapeError);
}

TEST_CASE("finite_diff_grad: x^2 at x=3 gives 6 exactly") {
    TensorT<double> x({1}, {3.0});
    std::vector<TensorT<double>*> params = {&x};
    const auto g = finite_diff_grad<double>([&]() { return x[0] * x[0]; }, params, 1e-3);
    CHECK(g[0][0] == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("finite_diff_grad: constant function has zero gradient") {
    TensorT<double> x({3}, {1.0, -2.0, 0.5});
    std::vector<TensorT<double>*> params = {&x};
    const auto g = finite_diff_grad<double>([]() { return 42.0; }, params, 1e-3);
    for (double v : g[0]) CHECK(v == 0.0);
}

TEST_CASE("per-op gradients match finite differences (20 seeds)") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        {  // conv2d, random small shapes
            const int c = 1 + static_cast<int>(rng.next_index(2));
            const int o = 1 + static_cast<int>(rng.next_index(2));
            const int k = 1 + 2 * static_cast<int>(rng.next_index(2));
            const int h = k + 1 + static_cast<int>(rng.next_index(3));
            const int w = k + 1 + static_cast<int>(rng.next_index(3));
            DTensor in = random_dtensor({c, h, w}, rng);
            DTensor ker = random_dtensor({o, c, k, k}, rng);
            DTensor bias = random_dtensor({o}, rng);
            gradcheck({&in, &ker, &bias},
                      [](const std::vector<DNode>& l) { return conv2d(l[0], l[1], l[2]); }, rng);
        }
        {  // maxpool2 (offsets keep values distinct, away from tie kinks)
            DTensor in = random_dtensor({1, 4, 4}, rng);
            for (std::size_t i = 0; i < in.size(); ++i) in[i] += static_cast<double>(i) * 0.01;
            gradcheck({&in}, [](const std::vector<DNode>& l) { return maxpool2(l[0]); }, rng);
        }
        {  // upconv2
            DTensor in = random_dtensor({2, 3, 3}, rng);
            DTensor ker = random_dtensor({2, 2, 2, 2}, rng);
            DTensor bias = random_dtensor({2}, rng);
            gradcheck({&in, &ker, &bias},
                      [](const std::vector<DNode>& l) { return upconv2(l[0], l[1], l[2]); }, rng);
        }
        {  // relu, nudged away from the kink at 0
            DTensor in = random_dtensor({2, 3, 3}, rng);
            for (auto i = 0u; i < in.size(); ++i) {
                if (std::abs(in[i]) < 1e-3) in[i] = 0.1;
            }
            gradcheck({&in}, [](const std::vector<DNode>& l) { return relu(l[0]); }, rng);
        }
        {  // softmax over channels
            DTensor in = random_dtensor({2, 3, 3}, rng, 2.0);
            gradcheck({&in}, [](const std::vector<DNode>& l) { return softmax_channels(l[0]); }, rng);
        }
        {  // center_crop + concat
            DTensor a = random_dtensor({2, 5, 6}, rng);
            DTensor b = random_dtensor({1, 3, 3}, rng);
            gradcheck({&a, &b}, [](const std::vector<DNode>& l) {
                return concat_channels(center_crop(l[0], 3, 3), l[1]);
            }, rng);
        }
    }
}

TEST_CASE("crop backward zero-pads a ones gradient") {
    DTensor x = DTensor::full({1, 4, 4}, 1.0);
    auto leaf = make_leaf(x, true);
    backward(sum_all(center_crop(leaf, 2, 2)));
    const auto g = leaf->grad_tensor();
    for (int y = 0; y < 4; ++y) {
        for (int x2 = 0; x2 < 4; ++x2) {
            const bool inside = y >= 1 && y <= 2 && x2 >= 1 && x2 <= 2;
            CHECK(g.at(0, y, x2) == (inside ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("maxpool backward routes the whole gradient to the tie winner") {
    DTensor x = DTensor::full({1, 2, 2}, 3.0);
    auto leaf = make_leaf(x, true);
    backward(sum_all(maxpool2(leaf)));
    const auto g = leaf->grad_tensor();
    CHECK(g.at(0, 0, 0) == 1.0);
    CHECK(g.at(0, 0, 1) == 0.0);
    CHECK(g.at(0, 1, 0) == 0.0);
    CHECK(g.at(0, 1, 1) == 0.0);
}

TEST_CASE("two-level conv/pool/softmax network matches finite differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(900 + seed);
        DTensor in = random_dtensor({1, 8, 8}, rng);
        DTensor k1 = random_dtensor({2, 1, 3, 3}, rng);
        DTensor b1 = random_dtensor({2}, rng, 0.1);
        DTensor k2 = random_dtensor({2, 2, 1, 1}, rng);
        DTensor b2 = random_dtensor({2}, rng, 0.1);
        auto mask = std::make_shared<SegMask>(3, 3);
        for (int i = 0; i < 9; ++i) mask->data[static_cast<std::size_t>(i)] = rng.next_bool();
        mask->data[0] = 1;

        auto build = [&](const DTensor& kk1, const DTensor& bb1, const DTensor& kk2, const DTensor& bb2,
                         std::vector<DNode>* leaves) {
            auto lin = make_leaf(in, false);
            auto lk1 = make_leaf(kk1, true), lb1 = make_leaf(bb1, true);
            auto lk2 = make_leaf(kk2, true), lb2 = make_leaf(bb2, true);
            if (leaves) *leaves = {lk1, lb1, lk2, lb2};
            auto x = maxpool2(relu(conv2d(lin, lk1, lb1)));  // [2,3,3]
            auto probs = softmax_channels(conv2d(x, lk2, lb2));
            return soft_fbeta_loss(probs, mask, 1.5);
        };

        std::vector<DNode> leaves;
        backward(build(k1, b1, k2, b2, &leaves));
        std::vector<DTensor*> params = {&k1, &b1, &k2, &b2};
        const auto fd = finite_diff_grad<double>([&]() { return build(k1, b1, k2, b2, nullptr)->scalar(); },
                                                 params, 1e-4);
        for (std::size_t p = 0; p < params.size(); ++p) {
            const auto got = leaves[p]->grad_tensor();
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(rel_err(got[i], fd[p][i]) < 1e-3);
            }
        }
    }
}

TEST_CASE("finite differences agree with backward on a ~500-parameter toy net") {
    Rng rng(4242);
    DTensor in = random_dtensor({2, 6, 6}, rng);
    DTensor k1 = random_dtensor({6, 2, 3, 3}, rng);   // 108
    DTensor b1 = random_dtensor({6}, rng, 0.1);       // 6
    DTensor k2 = random_dtensor({7, 6, 3, 3}, rng);   // 378
    DTensor b2 = random_dtensor({7}, rng, 0.1);       // 7
    // 499 parameters total
    DTensor w = random_dtensor({7, 2, 2}, rng);

    auto build = [&](std::vector<DNode>* leaves) {
        auto lk1 = make_leaf(k1, true), lb1 = make_leaf(b1, true);
        auto lk2 = make_leaf(k2, true), lb2 = make_leaf(b2, true);
        if (leaves) *leaves = {lk1, lb1, lk2, lb2};
        auto x = relu(conv2d(make_leaf(in, false), lk1, lb1));
        auto y = relu(conv2d(x, lk2, lb2));
        return weighted_sum(y, w);
    };
    std::vector<DNode> leaves;
    backward(build(&leaves));
    std::vector<DTensor*> params = {&k1, &b1, &k2, &b2};
    const auto fd = finite_diff_grad<double>([&]() { return build(nullptr)->scalar(); }, params, 1e-5);
    std::size_t total = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const auto got = leaves[p]->grad_tensor();
        total += got.size();
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(rel_err(got[i], fd[p][i]) < 1e-3);
        }
    }
    CHECK(total == 499);
}

}  // TEST_SUITE
