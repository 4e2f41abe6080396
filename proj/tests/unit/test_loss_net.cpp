// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "eccl/generator.hpp"
#include "eccl/loss_net.hpp"

using namespace eccl;

namespace {

GenConfig small_gen() {
    GenConfig g;
    g.width = g.height = 6;
    return g;
}

LossNetConfig small_loss(double lr, int epochs, int batch) {
    LossNetConfig c;
    c.residual_blocks = 1;
    c.conv_filters = 8;
    c.head_hidden = 16;
    c.lr = lr;
    c.epochs = epochs;
    c.batch_size = batch;
    return c;
}

std::vector<MapLossRecord> records_with(const std::vector<double>& targets, std::uint64_t seed) {
    const auto boards = generate(static_cast<int>(targets.size()), seed, small_gen());
    std::vector<MapLossRecord> out;
    for (std::size_t i = 0; i < targets.size(); ++i) out.push_back({boards[i], targets[i]});
    return out;
}

}  // namespace

TEST(LossPredictor, ZeroParamsPredictZero) {
    LossPredictor net(small_loss(1e-4, 1, 4), 6, 6, 1);
    for (std::size_t i = 0; i < net.params().size(); ++i) net.params().entry(i).value.fill(0.0f);
    for (const Board& b : generate(10, 3, small_gen())) EXPECT_EQ(net.predict_loss(b), 0.0);
}

TEST(LossPredictor, PureAndBatchConsistent) {
    const LossPredictor net(small_loss(1e-4, 1, 4), 6, 6, 2);
    const auto boards = generate(70, 4, small_gen());
    const auto batch = net.predict_batch(boards);
    ASSERT_EQ(batch.size(), boards.size());
    for (std::size_t i = 0; i < boards.size(); ++i) {
        const double a = net.predict_loss(boards[i]);
        EXPECT_EQ(a, net.predict_loss(Board(boards[i])));
        EXPECT_NEAR(a, batch[i], 1e-5);
    }
}

TEST(LossPredictor, CopiesAreIndependentSnapshots) {
    LossPredictor net(small_loss(1e-3, 2, 4), 6, 6, 5);
    const LossPredictor snap = net;
    const auto recs = records_with({1, 2, 3, 4}, 6);
    const double before = snap.predict_loss(recs[0].board);
    std::mt19937_64 rng(1);
    net.train(recs, rng);
    EXPECT_EQ(snap.predict_loss(recs[0].board), before);
    EXPECT_NE(net.predict_loss(recs[0].board), before);
}

TEST(RecordMapLoss, MeanOfAbsolute) {
    const std::vector<ExperienceLoss> a{{0, 2.0}, {0, 4.0}};
    EXPECT_EQ(record_map_loss(0, a), 3.0);
    const std::vector<ExperienceLoss> z{{1, 0.0}};
    EXPECT_EQ(record_map_loss(1, z), 0.0);
    const std::vector<ExperienceLoss> neg{{2, -2.0}, {2, 1.0}};
    EXPECT_EQ(record_map_loss(2, neg), 1.5);
    EXPECT_FALSE(record_map_loss(7, a).has_value());
    EXPECT_FALSE(record_map_loss(0, std::vector<ExperienceLoss>{}).has_value());
}

TEST(RecordMapLoss, GroupingMatchesRegroup) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ExperienceLoss> all;
        const int n = std::uniform_int_distribution<int>(1, 300)(rng);
        for (int i = 0; i < n; ++i)
            all.push_back({std::uniform_int_distribution<int>(0, 9)(rng),
                           std::uniform_real_distribution<double>(-3, 3)(rng)});
        std::map<int, std::vector<double>> oracle;
        for (const auto& e : all) oracle[e.map_id].push_back(std::abs(e.loss));
        const auto grouped = group_map_losses(all);
        ASSERT_EQ(grouped.size(), oracle.size());
        std::size_t k = 0;
        for (const auto& [id, values] : oracle) {
            EXPECT_EQ(grouped[k].map_id, id);
            EXPECT_EQ(grouped[k].samples, static_cast<int>(values.size()));
            EXPECT_NEAR(grouped[k].mean_loss, std::accumulate(values.begin(), values.end(), 0.0) / values.size(),
                        1e-12);
            ++k;
        }
    }
}

TEST(LossTrain, EmptyRecordsThrow) {
    LossPredictor net(small_loss(1e-4, 1, 4), 6, 6, 1);
    std::mt19937_64 rng(1);
    EXPECT_THROW(net.train(std::vector<MapLossRecord>{}, rng), std::invalid_argument);
}

TEST(LossTrain, OverfitsTwentyDistinctTargets) {
    std::vector<double> targets;
    for (int i = 0; i < 20; ++i) targets.push_back(0.5 * i);
    const auto recs = records_with(targets, 11);
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / 20.0;
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean) / 20.0;

    LossPredictor net(small_loss(3e-3, 400, 4), 6, 6, 12);
    std::mt19937_64 rng(13);
    const auto report = net.train(recs, rng);
    EXPECT_LT(report.mse, 0.05 * var);
    EXPECT_NEAR(net.mse(recs), report.mse, 1e-9);
}

TEST(LossTrain, ConstantTargetsConverge) {
    const auto recs = records_with(std::vector<double>(12, 2.0), 21);
    LossPredictor net(small_loss(1e-3, 150, 4), 6, 6, 22);
    std::mt19937_64 rng(23);
    net.train(recs, rng);
    for (const auto& r : recs) EXPECT_NEAR(net.predict_loss(r.board), 2.0, 0.05);
}

TEST(LossTrain, EpochMseMostlyNonIncreasing) {
    int good = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 data(100 + t);
        std::vector<double> targets;
        for (int i = 0; i < 16; ++i) targets.push_back(std::uniform_real_distribution<double>(0, 2)(data));
        const auto recs = records_with(targets, 200 + t);
        LossPredictor net(LossNetConfig{1, 8, 16, 1e-4, 4, 16}, 6, 6, 300 + t);
        std::mt19937_64 rng(400 + t);
        double prev = net.mse(recs);
        const auto report = net.train(recs, rng);
        ASSERT_EQ(report.epoch_mse.size(), 4u);
        bool monotone = true;
        for (double m : report.epoch_mse) {
            if (m > prev) monotone = false;
            prev = m;
        }
        good += monotone;
    }
    EXPECT_GE(good, (trials * 9 + 9) / 10);
}

TEST(LossTrain, SingleRecordApproachesTarget) {
    // error averaged over 10 seeds shrinks round after round
    const auto recs = records_with({1.5}, 31);
    std::vector<double> mean_err(6, 0.0);
    for (int s = 0; s < 10; ++s) {
        LossPredictor net(small_loss(1e-3, 5, 1), 6, 6, 500 + s);
        std::mt19937_64 rng(600 + s);
        for (int round = 0; round < 6; ++round) {
            net.train(recs, rng);
            mean_err[static_cast<std::size_t>(round)] += std::abs(net.predict_loss(recs[0].board) - 1.5) / 10.0;
        }
    }
    for (std::size_t r = 1; r < mean_err.size(); ++r) EXPECT_LT(mean_err[r], mean_err[r - 1]);
}

TEST(LossNetCheckpoint, RoundTrip) {
    LossPredictor net(small_loss(1e-3, 2, 4), 6, 6, 9);
    std::mt19937_64 rng(1);
    net.train(records_with({1, 2, 3}, 8), rng);
    const auto path = std::filesystem::temp_directory_path() / "eccl_test_loss.ckpt";
    save_loss_net(net, path);
    const LossPredictor back = load_loss_net(path);
    EXPECT_EQ(back.config(), net.config());
    EXPECT_EQ(back.params(), net.params());
    for (const Board& b : generate(5, 10, small_gen())) EXPECT_EQ(back.predict_loss(b), net.predict_loss(b));
    std::filesystem::remove(path);
}
