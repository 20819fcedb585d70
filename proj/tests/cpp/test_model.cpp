#include <doctest.h>

#include "seanet/model.hpp"
#include "testutil.hpp"

#include <random>
#include <string>

using namespace seanet;
using namespace testutil;

namespace {

int64_t param_total(const ModelOptions& opt) {
    SeaNet<float> net(opt);
    return net.parameter_count();
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("full-width parameter total and per-part breakdown") {
    SeaNet<float> net;
    // hand-enumerated: encoder 1811712 (+412160 dormant tail kept for
    // checkpoint compatibility), DSMM 92512, ESAM 5048, decoder 419491,
    // shared PReLU 1
    CHECK(net.encoder->parameter_count() == 2223872);
    CHECK(net.dsmm->parameter_count() == 92512);
    CHECK(net.esam->parameter_count() == 5048);
    CHECK(net.decoder->parameter_count() == 419491);
    CHECK(net.edge_prelu->parameter_count() == 1);
    CHECK(net.parameter_count() == 2740924);
}

TEST_CASE("ablation switches shift the budget by the enumerated deltas") {
    const int64_t full = 2740924;
    CHECK(param_total({}) == full);

    ModelOptions o;
    o.no_dsmm = true;
    CHECK(param_total(o) == full - 131488); // module 92512 + D34 stage shrink 38976

    o = {};
    o.no_esam = true;
    CHECK(param_total(o) == full - 7880); // module 5048 + D12 stage shrink 2832

    o = {};
    o.no_sm = true;
    CHECK(param_total(o) == full - 58752);

    o = {};
    o.no_dilation = true;
    CHECK(param_total(o) == full); // dilation carries no parameters

    o = {};
    o.no_ccorr1 = true;
    CHECK(param_total(o) == full - 30144);

    o = {};
    o.no_ccorr2 = true;
    CHECK(param_total(o) == full - 2352);

    o = {};
    o.no_eeu = true;
    CHECK(param_total(o) == full - 1200);

    o = {};
    o.no_alignment = true;
    CHECK(param_total(o) == full - 1);
}

TEST_CASE("inconsistent ablation combinations are rejected") {
    auto reject = [](auto mut) {
        ModelOptions o;
        mut(o);
        CHECK_THROWS_AS(SeaNet<float>{o}, Error);
    };
    reject([](ModelOptions& o) { o.no_dsmm = o.no_sm = true; });
    reject([](ModelOptions& o) { o.no_dsmm = o.no_dilation = true; });
    reject([](ModelOptions& o) { o.no_dsmm = o.no_ccorr1 = true; });
    reject([](ModelOptions& o) { o.no_esam = o.no_eeu = true; });
    reject([](ModelOptions& o) { o.no_esam = o.no_ccorr2 = true; });

    // orthogonal combinations stay legal
    ModelOptions ok;
    ok.no_dsmm = true;
    ok.no_esam = true;
    CHECK_NOTHROW(SeaNet<float>(ok));
}

TEST_CASE("forward emits three maps plus edge maps at full width") {
    std::mt19937_64 rng(81);
    SeaNet<float> net;
    net.init_weights(rng);
    net.eval();
    NoGradGuard ng;
    std::mt19937_64 fwd(7);

    auto x = rand_tensor<float>({1, 3, 288, 288}, rng, -1.0f, 1.0f);
    auto out = net.forward(x, fwd);
    CHECK(out.maps.s1.prob.shape() == Shape{1, 1, 288, 288});
    CHECK(out.maps.s2.prob.shape() == Shape{1, 1, 144, 144});
    CHECK(out.maps.s3.prob.shape() == Shape{1, 1, 36, 36});
    CHECK(out.edge1.shape() == Shape{1, 24, 144, 144});
    CHECK(out.edge2.shape() == Shape{1, 24, 144, 144});

    // strict input gate
    auto small = rand_tensor<float>({1, 3, 96, 96}, rng, -1.0f, 1.0f);
    CHECK_THROWS_AS(net.forward(small, fwd), Error);
}

TEST_CASE("evaluation forward is deterministic; training dropout is not") {
    std::mt19937_64 rng(82);
    ModelOptions tiny;
    tiny.width_mult = 0.25;
    SeaNet<float> net(tiny);
    net.init_weights(rng);
    NoGradGuard ng;

    auto x = rand_tensor<float>({1, 3, 288, 288}, rng, -1.0f, 1.0f);
    net.eval();
    std::mt19937_64 fa(1), fb(999);
    auto a = net.forward(x, fa);
    auto b = net.forward(x, fb);
    for (int64_t i = 0; i < a.maps.s1.prob.numel(); i += 37)
        REQUIRE(a.maps.s1.prob[i] == b.maps.s1.prob[i]);

    net.train();
    std::mt19937_64 fc(1), fd(999);
    auto c = net.forward(x, fc);
    auto d = net.forward(x, fd);
    bool same = true;
    for (int64_t i = 0; i < c.maps.s1.prob.numel(); ++i)
        same = same && c.maps.s1.prob[i] == d.maps.s1.prob[i];
    CHECK_FALSE(same);
}

TEST_CASE("ablated forwards keep the output contract") {
    std::mt19937_64 rng(83);
    NoGradGuard ng;
    auto x = rand_tensor<float>({1, 3, 288, 288}, rng, -1.0f, 1.0f);

    ModelOptions o;
    o.width_mult = 0.25;
    o.no_dsmm = true;
    SeaNet<float> nd(o);
    nd.init_weights(rng);
    nd.eval();
    std::mt19937_64 fwd(1);
    auto od = nd.forward(x, fwd);
    CHECK(od.maps.s1.prob.shape() == Shape{1, 1, 288, 288});
    CHECK(od.edge1.defined()); // edge module still present

    o = {};
    o.width_mult = 0.25;
    o.no_esam = true;
    SeaNet<float> ne(o);
    ne.init_weights(rng);
    ne.eval();
    auto oe = ne.forward(x, fwd);
    CHECK(oe.maps.s1.prob.shape() == Shape{1, 1, 288, 288});
    CHECK_FALSE(oe.edge1.defined());
    CHECK(ne.edge_prelu != nullptr); // loss PReLU tied to no_alignment, not no_esam

    o = {};
    o.width_mult = 0.25;
    o.no_eeu = true;
    o.no_alignment = true;
    SeaNet<float> na(o);
    na.init_weights(rng);
    na.eval();
    auto oa = na.forward(x, fwd);
    CHECK(oa.edge1.defined()); // edges still computed without the loss term
    CHECK(na.edge_prelu == nullptr);
}

TEST_SUITE_END();
