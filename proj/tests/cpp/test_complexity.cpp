#include <doctest.h>

#include "seanet/complexity.hpp"
#include "testutil.hpp"

#include <string>
#include <vector>

using namespace seanet;

TEST_SUITE_BEGIN("complexity");

TEST_CASE("convolution counters match closed forms") {
    SUBCASE("1x1, no bias: H*W*Cin*Cout, grid untouched") {
        Conv2d<float> c(8, 16, 1, 1, 0, 1, 1, /*with_bias=*/false);
        flops::Grid g{10, 12};
        CHECK(flops::conv(c, g) == 10 * 12 * 8 * 16);
        CHECK(g.h == 10);
        CHECK(g.w == 12);
    }
    SUBCASE("3x3 stride 2: output extent shrinks, bias adds one per output") {
        Conv2d<float> c(2, 4, 3, 2, 1, 1, 1, /*with_bias=*/true);
        CHECK(c.parameter_count() == 2 * 4 * 9 + 4);
        flops::Grid g{9, 9};
        // 5x5 outputs, 72 weights each, plus the bias add
        CHECK(flops::conv(c, g) == 25 * 72 + 25 * 4);
        CHECK(g.h == 5);
        CHECK(g.w == 5);
    }
    SUBCASE("depthwise: weight has one input plane per group") {
        Conv2d<float> c(6, 6, 3, 1, 1, 1, /*groups=*/6, /*with_bias=*/false);
        flops::Grid g{8, 8};
        CHECK(flops::conv(c, g) == 64 * 6 * 9);
    }
    SUBCASE("conv+bn+act adds two per output, one when the activation is identity") {
        ConvBNAct<float> act(3, 5, 1, 1, 0, 1, Act::ReLU);
        ConvBNAct<float> lin(3, 5, 1, 1, 0, 1, Act::None);
        flops::Grid ga{4, 4}, gl{4, 4};
        CHECK(flops::conv_bn_act(act, ga) == 16 * 3 * 5 + 2 * 16 * 5);
        CHECK(flops::conv_bn_act(lin, gl) == 16 * 3 * 5 + 16 * 5);
    }
    SUBCASE("depthwise-separable pair") {
        DSConv<float> ds(8, 20);
        flops::Grid g{6, 6};
        const int64_t dw = 36 * 8 * 9 + 2 * 36 * 8;
        const int64_t pw = 36 * 8 * 20 + 2 * 36 * 20;
        CHECK(flops::dsconv(ds, g) == dw + pw);
    }
}

TEST_CASE("resize, pooling, and channel-space counters") {
    SUBCASE("bilinear upsample: four taps per output, grid scales") {
        flops::Grid g{5, 7};
        CHECK(flops::upsample(3, g, 2) == 4 * 3 * 10 * 14);
        CHECK(g.h == 10);
        CHECK(g.w == 14);
    }
    SUBCASE("size-preserving local average pool") {
        flops::Grid g{8, 8};
        CHECK(flops::local_avg_pool(4, g, 3) == 9 * 4 * 64);
    }
    SUBCASE("adaptive pool sums the actual floor/ceil window extents") {
        // 9 -> 5 per axis gives spans {2,3,3,3,2}: 13 reads per axis
        flops::Grid g{9, 9};
        CHECK(flops::adaptive_avg_pool(32, g, 5, 5) == 32 * 13 * 13);
        // evenly divisible case degenerates to the plain window product
        flops::Grid e{10, 10};
        CHECK(flops::adaptive_avg_pool(7, e, 5, 5) == 7 * 10 * 10);
    }
    SUBCASE("softmax, matmul, dynamic depthwise") {
        CHECK(flops::softmax(100) == 300);
        CHECK(flops::matmul(3, 4, 5) == 60);
        flops::Grid g{6, 5};
        CHECK(flops::ddconv(8, g, 5) == 25 * 8 * 30);
    }
}

TEST_CASE("module walkers reproduce hand counts at the native size") {
    SeaNet<float> net;

    SUBCASE("encoder stem and early bottlenecks, then the full stack") {
        flops::Grid g{288, 288};
        CHECK(flops::conv_bn_act(*net.encoder->stem, g) == 19243008);
        CHECK(g.h == 144);
        CHECK(flops::inverted_residual(*net.encoder->blocks[0], g) == 18247680);
        CHECK(flops::inverted_residual(*net.encoder->blocks[1], g) == 53374464);
        CHECK(g.h == 72);
        CHECK(flops::inverted_residual(*net.encoder->blocks[2], g) == 45785088);

        flops::Grid full{288, 288};
        CHECK(flops::encoder(*net.encoder, full) == 483187680);
        CHECK(full.h == 9); // ends at the deepest tap
    }
    SUBCASE("channel correlation at both attachment points") {
        // 6*C^2*HW for the four matmuls plus both residual adds and softmaxes,
        // plus two depthwise-separable refinements of HW*(C^2 + 13C)
        const flops::Grid g3{36, 36}, g1{144, 144};
        CHECK(flops::ccorr(*net.dsmm->ccorr, g3) == 75202560);
        CHECK(flops::ccorr(*net.esam->ccorr, g1) == 85601664);
    }
    SUBCASE("matching, edge, and decode modules") {
        const flops::Grid g1{144, 144}, g3{36, 36}, g5{9, 9};
        CHECK(flops::dsmm(*net.dsmm, g3) == 94363520);
        CHECK(flops::esam(*net.esam, g1) == 142625664);
        CHECK(flops::decoder(*net.decoder, g5) == 953329824);
    }
}

TEST_CASE("report rows, totals, and parameter agreement") {
    SeaNet<float> net;
    const ComplexityReport rep = analyze_complexity(net);

    CHECK(rep.input_size == 288);
    CHECK(rep.convention == std::string(kFlopsConvention));

    const std::vector<std::string> expected = {"encoder", "encoder_unused_tail", "dsmm",
                                               "esam",    "decoder",             "edge_prelu"};
    REQUIRE(rep.entries.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) CHECK(rep.entries[i].name == expected[i]);

    CHECK(rep.find("encoder")->params == 1811712);
    CHECK(rep.find("encoder_unused_tail")->params == 412160);
    CHECK(rep.find("dsmm")->params == 92512);
    CHECK(rep.find("esam")->params == 5048);
    CHECK(rep.find("decoder")->params == 419491);
    CHECK(rep.find("edge_prelu")->params == 1);
    CHECK(rep.total_params == net.parameter_count());
    CHECK(rep.total_params == 2740924);

    // pieces that never run in inference cost nothing
    CHECK(rep.find("encoder_unused_tail")->flops == 0);
    CHECK(rep.find("edge_prelu")->flops == 0);
    CHECK(rep.find("encoder")->flops == 483187680);
    CHECK(rep.find("dsmm")->flops == 94363520);
    CHECK(rep.find("esam")->flops == 142625664);
    CHECK(rep.find("decoder")->flops == 953329824);

    int64_t params = 0, mac = 0;
    for (const auto& e : rep.entries) {
        CHECK(e.params >= 0);
        CHECK(e.flops >= 0);
        params += e.params;
        mac += e.flops;
    }
    CHECK(rep.total_params == params);
    CHECK(rep.total_flops == mac);
    CHECK(rep.total_flops == 1673506688);
    CHECK(rep.find("nonexistent") == nullptr);
}

TEST_CASE("totals track the live parameter count across widths and ablations") {
    std::vector<ModelOptions> variants;
    for (double w : {0.25, 0.5, 1.0}) {
        ModelOptions o;
        o.width_mult = w;
        variants.push_back(o);
    }
    ModelOptions lean;
    lean.no_dsmm = lean.no_esam = lean.no_alignment = true;
    variants.push_back(lean);
    ModelOptions inner;
    inner.no_sm = inner.no_eeu = true;
    variants.push_back(inner);

    for (const auto& opt : variants) {
        SeaNet<float> net(opt);
        const ComplexityReport rep = analyze_complexity(net);
        CHECK(rep.total_params == net.parameter_count());
        CHECK(rep.total_flops > 0);
    }
}

TEST_CASE("doubling the input quadruples every spatially-resolved row") {
    SeaNet<float> net;
    const ComplexityReport base = analyze_complexity(net, 288);
    const ComplexityReport big = analyze_complexity(net, 576);

    CHECK(big.total_params == base.total_params);
    // encoder and decoder are purely spatial, so the scaling is exact
    CHECK(big.find("encoder")->flops == 4 * base.find("encoder")->flops);
    CHECK(big.find("decoder")->flops == 4 * base.find("decoder")->flops);
    // dsmm/esam carry small channel-space terms (softmax over CxC affinities,
    // fixed 5x5 adaptive-pool targets) that do not scale with area
    for (const char* name : {"dsmm", "esam"}) {
        const double ratio = static_cast<double>(big.find(name)->flops) /
                             static_cast<double>(base.find(name)->flops);
        CHECK(ratio > 3.99);
        CHECK(ratio <= 4.0);
    }
    const double total_ratio =
        static_cast<double>(big.total_flops) / static_cast<double>(base.total_flops);
    CHECK(total_ratio > 3.99);
    CHECK(total_ratio <= 4.0);
}

TEST_CASE("ablations move the rows by their computed costs") {
    auto report_for = [](ModelOptions o) {
        SeaNet<float> net(o);
        return analyze_complexity(net);
    };
    const ComplexityReport base = report_for({});

    SUBCASE("swapping dilation rates for {1,1,1} changes nothing") {
        ModelOptions o;
        o.no_dilation = true;
        const ComplexityReport rep = report_for(o);
        CHECK(rep.find("dsmm")->flops == base.find("dsmm")->flops);
        CHECK(rep.find("dsmm")->params == base.find("dsmm")->params);
    }
    SUBCASE("concatenation instead of correlation drops the whole attention cost") {
        ModelOptions o1;
        o1.no_ccorr1 = true;
        const ComplexityReport r1 = report_for(o1);
        CHECK(r1.find("dsmm")->flops == 94363520 - 75202560);
        CHECK(r1.find("dsmm")->params == 92512 - 30144);

        ModelOptions o2;
        o2.no_ccorr2 = true;
        const ComplexityReport r2 = report_for(o2);
        CHECK(r2.find("esam")->flops == 142625664 - 85601664);
        CHECK(r2.find("esam")->params == 5048 - 2352);
    }
    SUBCASE("dropping semantic matching keeps only align, upsample, correlation") {
        ModelOptions o;
        o.no_sm = true;
        const ComplexityReport rep = report_for(o);
        CHECK(rep.find("dsmm")->flops == 80386560);
        CHECK(rep.find("dsmm")->params == 92512 - 58752);
    }
    SUBCASE("dropping the edge gates still pays for edge extraction") {
        ModelOptions o;
        o.no_eeu = true;
        const ComplexityReport rep = report_for(o);
        CHECK(rep.find("esam")->flops == 114756480);
        CHECK(rep.find("esam")->params == 5048 - 1200);
    }
    SUBCASE("removing a module deletes its row and slims the decoder") {
        ModelOptions od;
        od.no_dsmm = true;
        const ComplexityReport rd = report_for(od);
        CHECK(rd.find("dsmm") == nullptr);
        CHECK(rd.find("decoder")->flops == 902816928);
        CHECK(rd.find("decoder")->params == 419491 - 38976);

        ModelOptions oe;
        oe.no_esam = true;
        const ComplexityReport re = report_for(oe);
        CHECK(re.find("esam") == nullptr);
        CHECK(re.find("decoder")->flops == 894605472);
        CHECK(re.find("decoder")->params == 419491 - 2832);
    }
    SUBCASE("removing the alignment term costs one parameter and no compute") {
        ModelOptions o;
        o.no_alignment = true;
        const ComplexityReport rep = report_for(o);
        CHECK(rep.find("edge_prelu") == nullptr);
        CHECK(rep.total_params == base.total_params - 1);
        CHECK(rep.total_flops == base.total_flops);
    }
}

TEST_CASE("input size validation") {
    SeaNet<float> net;
    CHECK_THROWS_AS(analyze_complexity(net, 0), Error);
    CHECK_THROWS_AS(analyze_complexity(net, -32), Error);
    CHECK_THROWS_AS(analyze_complexity(net, 100), Error);
    // multiple of 32 but too small for the 5x5 semantic kernels
    CHECK_THROWS_AS(analyze_complexity(net, 128), Error);
    CHECK_NOTHROW(analyze_complexity(net, 160));

    // without the semantic-matching branch the 5x5 floor does not apply
    ModelOptions o;
    o.no_sm = true;
    SeaNet<float> slim(o);
    CHECK_NOTHROW(analyze_complexity(slim, 128));
    CHECK_THROWS_AS(analyze_complexity(slim, 100), Error);
}

TEST_SUITE_END();
