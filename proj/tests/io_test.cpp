// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cpd/io.hpp"
#include "test_util.hpp"

using namespace cpd;
using cpd::testing::random_model;
using cpd::testing::random_tensor;

TEST(TensorFile, SingletonByteLayout) {
    DenseTensor t(Shape({1, 1, 1}), {3.5});
    const auto bytes = encode_tensor(t);
    EXPECT_EQ(bytes.size(), 4u + 1 + 1 + 24 + 8);
    EXPECT_EQ(bytes[0], 'C');
    EXPECT_EQ(bytes[1], 'P');
    EXPECT_EQ(bytes[2], 'D');
    EXPECT_EQ(bytes[3], 'T');
    EXPECT_EQ(bytes[4], 1);  // version
    EXPECT_EQ(bytes[5], 3);  // order
    const DenseTensor back = decode_tensor(bytes);
    EXPECT_EQ(back.shape(), t.shape());
    EXPECT_EQ(back.values(), t.values());
}

TEST(TensorFile, RandomRoundTripIsBitExact) {
    Rng rng(701);
    const DenseTensor t = random_tensor(Shape({5, 4, 3}), rng);
    const DenseTensor back = decode_tensor(encode_tensor(t));
    EXPECT_EQ(back.values(), t.values());
    EXPECT_EQ(encode_tensor(back), encode_tensor(t));
}

TEST(TensorFile, RejectsCorruptInput) {
    Rng rng(703);
    const DenseTensor t = random_tensor(Shape({2, 2}), rng);
    auto bytes = encode_tensor(t);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    EXPECT_THROW(decode_tensor(truncated), format_error);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_tensor(bad_magic), format_error);

    DenseTensor nan_tensor = t;
    nan_tensor.values()[1] = std::nan("");
    EXPECT_THROW(decode_tensor(encode_tensor(nan_tensor)), format_error);

    auto zero_extent = bytes;
    for (int i = 0; i < 8; ++i) zero_extent[6 + i] = 0;
    EXPECT_THROW(decode_tensor(zero_extent), format_error);

    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(decode_tensor(trailing), format_error);
}

TEST(ModelFile, RoundTripIsBitExact) {
    Rng rng(707);
    const Shape shape({6, 5, 4});
    const KruskalModel m = random_model(shape, 3, rng);
    const auto bytes = encode_model(m, shape);
    const DecodedModel back = decode_model(bytes);
    EXPECT_EQ(back.shape, shape);
    EXPECT_EQ(back.model.lambda, m.lambda);
    for (std::size_t k = 0; k < m.order(); ++k)
        EXPECT_EQ(back.model.factors[k].values(), m.factors[k].values());
}

TEST(ModelFile, RejectsNegativeWeights) {
    Rng rng(709);
    const Shape shape({3, 3});
    KruskalModel m = random_model(shape, 2, rng);
    m.lambda[0] = -1.0;
    EXPECT_THROW(decode_model(encode_model(m, shape)), format_error);
}

TEST(TraceFile, RoundTrip) {
    std::vector<TraceRow> rows;
    rows.push_back({1, {0, 1, 2}, 0.5, 0.25, 0.001, 2, 1000, 0.0, false});
    rows.push_back({2, {0, 2, 1}, 0.75, 0.0625, 0.002, 3, 2000, 1.0 / 500.0, true});
    const std::string text = format_trace_csv(rows);
    const auto back = parse_trace_csv(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].iteration, 1u);
    EXPECT_EQ(back[0].update_order, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(back[0].fitness, 0.5);
    EXPECT_EQ(back[1].update_order, (std::vector<std::size_t>{0, 2, 1}));
    EXPECT_EQ(back[1].beta_used, 1.0 / 500.0);
    EXPECT_TRUE(back[1].regularized);
    // Cumulative counters non-decreasing.
    EXPECT_LE(back[0].root_ttm_count, back[1].root_ttm_count);
    EXPECT_LE(back[0].flops, back[1].flops);
}

TEST(TraceFile, RejectsBadHeader) {
    EXPECT_THROW(parse_trace_csv("iter,order\n1,123\n"), format_error);
}

TEST(Files, MissingFileRaisesFileError) {
    EXPECT_THROW(read_tensor_file("/nonexistent/path.cpdt"), file_error);
}
