#include <gtest/gtest.h>

#include "advdn/errors.hpp"
#include "advdn/evaluation.hpp"
#include "advdn/metrics.hpp"
#include "advdn/noise.hpp"
#include "support.hpp"

using namespace advdn;

namespace {

// Classical models are cheap and reliably improve PSNR, which makes the
// admission predicates predictable. x' is a fixed checkerboard push.
std::vector<AttackTriple> triples(int count, double push) {
  std::vector<AttackTriple> out;
  for (int i = 0; i < count; ++i) {
    const Image y = support::scene(32, 32, 40 + i).with_id("img" + std::to_string(i));
    const auto obs = add_gaussian_noise(y, 25.0, 7 + i);
    NoiseField v(y.shape());
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) v[r * 32 + c] = ((r / 2 + c / 2) % 2 ? push : -push) * (1 + i % 3);
    out.push_back({obs.x.with_id(y.id()), compose(obs.x, v, y.id()), y});
  }
  return out;
}

std::vector<TrainedDenoiser> tv_zoo() {
  return {TrainedDenoiser::tv_classical("tv-a", 0.1, 30), TrainedDenoiser::tv_classical("tv-b", 0.25, 30),
          TrainedDenoiser::tv_classical("tv-c", 0.5, 30)};
}

std::vector<const TrainedDenoiser*> ptrs(const std::vector<TrainedDenoiser>& z) {
  std::vector<const TrainedDenoiser*> p;
  for (const auto& d : z) p.push_back(&d);
  return p;
}

}  // namespace

TEST(Filter, PredicatesFollowDefinitions) {
  const auto zoo = tv_zoo();
  const auto ts = triples(1, 0.06);
  const auto& t = ts[0];
  const FilterOutcome f = transfer_filter(zoo[0], zoo[1], t, 0.0);
  const double ex = psnr(t.y, t.x);
  EXPECT_EQ(f.d1_improves, psnr(t.y, zoo[0].denoise(t.x)) > ex);
  EXPECT_EQ(f.d2_improves, psnr(t.y, zoo[1].denoise(t.x)) > ex);
  const double drop = psnr(t.y, zoo[0].denoise(t.x)) - psnr(t.y, zoo[0].denoise(t.x_prime));
  EXPECT_EQ(f.source_drop, drop > 0.0);
  EXPECT_TRUE(f.admitted());

  // A denoiser that changes nothing never improves, so nothing is admitted.
  const auto spec = DenoiserSpec::residual(3, 8, false);
  const TrainedDenoiser ident("ident", spec, std::vector<float>(spec.parameter_count(), 0.0f));
  EXPECT_FALSE(transfer_filter(ident, zoo[1], t, 0.0).admitted());
  EXPECT_TRUE(filter_transfer_set(ident, zoo[1], ts, 0.0).empty());
  EXPECT_FALSE(transfer_filter(zoo[0], zoo[1], t, 1e6).admitted());
}

TEST(TransferMatrixTest, CellsMatchCensusOracle) {
  const auto zoo = tv_zoo();
  const auto ts = triples(6, 0.05);
  const double m = 0.3;
  const std::vector<std::vector<AttackTriple>> samples(3, ts);
  const TransferMatrix tm = transfer_matrix(ptrs(zoo), samples, m);
  ASSERT_EQ(tm.cells.size(), 9u);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t t = 0; t < 3; ++t) {
      double sum = 0.0;
      int admitted = 0, hits = 0;
      for (const auto& tr : ts) {
        if (!transfer_filter(zoo[s], zoo[t], tr, m).admitted()) continue;
        const double drop = psnr(tr.y, zoo[t].denoise(tr.x)) - psnr(tr.y, zoo[t].denoise(tr.x_prime));
        sum += drop;
        ++admitted;
        hits += drop > m;
      }
      const TransferCell& c = tm.cell(s, t);
      EXPECT_EQ(c.n_admitted, admitted);
      EXPECT_EQ(c.n_total, 6);
      if (admitted) {
        EXPECT_NEAR(c.mean_psnr_drop, sum / admitted, 1e-12);
        EXPECT_NEAR(c.transfer_rate, static_cast<double>(hits) / admitted, 1e-15);
      }
    }
  EXPECT_GT(tm.cell(0, 0).n_admitted, 0);
  EXPECT_EQ(&tm.cell("tv-b", "tv-c"), &tm.cell(1, 2));
  EXPECT_THROW(tm.cell("tv-b", "nope"), ResolutionError);
}

TEST(TransferMatrixTest, DuplicateModelGivesEqualCells) {
  const auto base = TrainedDenoiser::tv_classical("d", 0.2, 30);
  const std::vector<TrainedDenoiser> zoo{base, base.renamed("d-copy")};
  const auto ts = triples(4, 0.05);
  const TransferMatrix tm = transfer_matrix(ptrs(zoo), {ts, ts}, 0.2);
  const TransferCell& ref = tm.cell(0, 0);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t t = 0; t < 2; ++t) {
      EXPECT_EQ(tm.cell(s, t).n_admitted, ref.n_admitted);
      EXPECT_EQ(tm.cell(s, t).mean_psnr_drop, ref.mean_psnr_drop);
      EXPECT_EQ(tm.cell(s, t).transfer_rate, ref.transfer_rate);
    }
}

TEST(TransferMatrixTest, PermutationEquivariant) {
  const auto zoo = tv_zoo();
  const auto ts = triples(4, 0.05);
  const TransferMatrix a = transfer_matrix(ptrs(zoo), {ts, ts, ts}, 0.3);
  const std::vector<TrainedDenoiser> perm{zoo[2], zoo[0], zoo[1]};
  const TransferMatrix b = transfer_matrix(ptrs(perm), {ts, ts, ts}, 0.3);
  for (const auto& s : a.models)
    for (const auto& t : a.models) {
      EXPECT_EQ(a.cell(s, t).n_admitted, b.cell(s, t).n_admitted);
      EXPECT_EQ(a.cell(s, t).mean_psnr_drop, b.cell(s, t).mean_psnr_drop);
    }
}

TEST(TransferMatrixTest, AttacksClassicalSourcesAreSkipped) {
  const auto tv = TrainedDenoiser::tv_classical("tv", 0.2, 20);
  const auto net = support::small_net(3, 8, 4, 1.0f);
  std::vector<Image> noisy, clean;
  for (const auto& t : triples(2, 0.0)) {
    noisy.push_back(t.x);
    clean.push_back(t.y);
  }
  const TransferMatrix tm = transfer_matrix({&tv, &net}, noisy, clean, AttackConfig::pgd(0.02, 2, 1), 0.0);
  EXPECT_EQ(tm.cell("tv", "tv").n_total, 0);
  EXPECT_EQ(tm.cell("tv", "net").n_admitted, 0);
  EXPECT_EQ(tm.cell("net", "tv").n_total, 2);
  const TransferMatrix again = transfer_matrix({&tv, &net}, noisy, clean, AttackConfig::pgd(0.02, 2, 1), 0.0);
  EXPECT_EQ(transfer_to_csv(tm), transfer_to_csv(again));
}

TEST(Aggregate, FromRecords) {
  std::vector<TransferRecord> recs;
  auto add = [&](const char* s, const char* t, double drop, bool hit) {
    TransferRecord r;
    r.source_id = s;
    r.target_id = t;
    r.target_drop = drop;
    r.target_ssim_drop = drop / 10;
    r.transferable = hit;
    recs.push_back(r);
  };
  add("a", "b", 1.0, true);
  add("a", "b", 0.2, false);
  add("a", "b", 0.6, true);
  add("b", "a", 2.0, true);
  const TransferMatrix m = aggregate_transfer({"a", "b"}, recs, {{1, 5}, {2, 5}}, 0.5);
  EXPECT_NEAR(m.cell("a", "b").mean_psnr_drop, 0.6, 1e-15);
  EXPECT_NEAR(m.cell("a", "b").mean_ssim_drop, 0.06, 1e-15);
  EXPECT_NEAR(m.cell("a", "b").transfer_rate, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(m.cell("a", "b").n_total, 5);
  EXPECT_EQ(m.cell("a", "a").n_admitted, 0);
  EXPECT_EQ(m.cell("a", "a").transfer_rate, 0.0);
  add("a", "z", 1.0, true);
  EXPECT_THROW(aggregate_transfer({"a", "b"}, recs, {}, 0.5), ResolutionError);

  const TransferRecord back = nlohmann::json(recs[0]).get<TransferRecord>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(recs[0]));
  const std::string csv = transfer_to_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kTransferCsvHeader);
}

TEST(Resistance, UnchangedInputsGiveZeroDrop) {
  const auto tv = TrainedDenoiser::tv_classical("tv", 0.2, 30);
  auto ts = triples(3, 0.0);
  for (auto& t : ts) t.x_prime = t.x;
  const ResistanceSummary s = resistance_test(tv, ts);
  EXPECT_EQ(s.mean_drop, 0.0);
  EXPECT_EQ(mean_psnr_drop(tv, ts), 0.0);
  ASSERT_EQ(s.records.size(), 3u);

  const auto pushed = triples(3, 0.05);
  double sum = 0.0;
  for (const auto& t : pushed) sum += psnr(t.y, tv.denoise(t.x)) - psnr(t.y, tv.denoise(t.x_prime));
  EXPECT_NEAR(mean_psnr_drop(tv, pushed), sum / 3, 1e-12);
}
