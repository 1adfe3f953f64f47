#include "doctest.h"
#include "gostat/catalog.hpp"

using namespace gostat;
using namespace gostat::catalog;

namespace {

PlayerTable fixture_players() {
  return PlayerTable::from_csv(parse_csv(
      "player_id,canonical_name,birth_date,gender,region,rank\n"
      "ke jie,Ke Jie,1997-08-02,Male,CHN,9\n"
      "gu li,Gu Li,1983-02-01,Male,CHN,9\n"
      "lee sedol,Lee Sedol,1983-03-02,Male,KOR,9\n"
      "iyama yuta,Iyama Yuta,1989-05-24,Male,JPN,9\n"
      "kim jiseok#1,Kim Jiseok,1989-06-13,Male,KOR,9\n"
      "kim jiseok#2,Kim Jiseok,,Unknown,,\n"));
}

TournamentTable fixture_tournaments() {
  return TournamentTable::from_csv(parse_csv(
      "category,edition,region_scope,importance,kind\n"
      "Samsung Cup,15th Samsung Cup,International,WorldMajor,Elimination\n"
      "Chinese League A,Chinese League A,NonInternational,Other,League\n"
      "LG Cup,LG Cup,International,WorldMajor,Elimination\n"));
}

sgf::GameRecord game(const std::string& props) {
  return sgf::parse_sgf("(;GM[1]FF[4]SZ[19]" + props + ";B[pd];W[dp])");
}

}  // namespace

TEST_CASE("cleaning verdicts for the named cases") {
  CleaningRules rules;
  rules.event_blocklist = {"AI Cup"};
  std::vector<sgf::GameRecord> recs = {
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-01]RE[B+R]HA[2]AB[dd][pp]"),
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-02]RE[W+F]"),
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-03]RE[W+R]EV[World AI Cup]"),
      game("PB[Ke Jie]PW[Gu Li]RE[W+R]"),
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-04]"),
  };
  auto out = ingest(recs, fixture_players(), fixture_tournaments(), rules);
  REQUIRE(out.size() == 5);
  CHECK(out[0].excluded == ExclusionReason::Handicap);
  CHECK(out[1].excluded == ExclusionReason::Abnormal);
  CHECK(out[2].excluded == ExclusionReason::Blocklisted);
  CHECK(out[3].excluded == ExclusionReason::NoDate);
  CHECK(out[4].excluded == ExclusionReason::Abnormal);  // missing RE = Unknown
}

TEST_CASE("three professional games get their region pairs") {
  std::vector<sgf::GameRecord> recs = {
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-01]RE[B+R]EV[Chinese League A]"),
      game("PB[Ke Jie]PW[Lee Sedol]DT[2019-01-02]RE[W+1.5]EV[15th Samsung Cup]"),
      game("PB[Iyama Yuta]PW[Lee Sedol]DT[2019-01-03]RE[B+R]EV[23rd LG Cup]"),
  };
  std::vector<std::string> log;
  auto out = ingest(recs, fixture_players(), fixture_tournaments(), CleaningRules{}, &log);
  REQUIRE(out.size() == 3);
  for (const auto& g : out) CHECK(g.kept());
  CHECK(out[0].region_pair == RegionPair::CHN);
  CHECK(out[1].region_pair == RegionPair::CR);
  CHECK(out[2].region_pair == RegionPair::CR);
  CHECK(out[0].tournament.kind == TournamentKind::League);
  CHECK(out[1].tournament.importance == Importance::WorldMajor);
  CHECK(out[2].tournament.category == "LG Cup");
  CHECK(out[2].tournament.edition == "23rd LG Cup");
}

TEST_CASE("duplicates keep the first copy and every record gets a verdict") {
  auto g = game("PB[Ke Jie]PW[Gu Li]DT[2019-01-01]RE[B+R]");
  std::vector<sgf::GameRecord> recs = {g, g};
  std::vector<std::string> log;
  auto out = ingest(recs, fixture_players(), fixture_tournaments(), CleaningRules{}, &log);
  REQUIRE(out.size() == 2);
  CHECK(out[0].kept());
  CHECK(out[1].excluded == ExclusionReason::Duplicate);
  CHECK(log.size() == 1);
}

TEST_CASE("unmatched and ambiguous names keep the game with unknown metadata") {
  auto players = fixture_players();
  CHECK(players.find("  KE   jie ") != nullptr);
  CHECK(players.find("Kim Jiseok") == nullptr);  // two profiles share the name
  CHECK(players.find("kim jiseok#2") != nullptr);
  auto out = ingest(std::vector{game("PB[Nobody]PW[Kim Jiseok]DT[2019-01-01]RE[B+R]")}, players,
                    fixture_tournaments(), CleaningRules{});
  REQUIRE(out.size() == 1);
  CHECK(out[0].kept());
  CHECK_FALSE(out[0].black.matched);
  CHECK(out[0].black.player_id == "?nobody");
  CHECK(out[0].black.region == Region::Unknown);
  CHECK_FALSE(out[0].tournament.matched);
}

TEST_CASE("cleaning is idempotent and deterministic") {
  std::vector<sgf::GameRecord> recs = {
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-01]RE[B+R]"),
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-02]RE[W+T]"),
      game("PB[Ke Jie]PW[Lee Sedol]DT[2019-01-02]RE[W+2.5]"),
  };
  auto first = ingest(recs, fixture_players(), fixture_tournaments(), CleaningRules{});
  std::vector<sgf::GameRecord> kept;
  for (const auto& g : first)
    if (g.kept()) kept.push_back(g.game);
  auto second = ingest(kept, fixture_players(), fixture_tournaments(), CleaningRules{});
  for (const auto& g : second) CHECK(g.kept());
  auto again = ingest(recs, fixture_players(), fixture_tournaments(), CleaningRules{});
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].excluded == again[i].excluded);
}

TEST_CASE("rules serialize and parse back") {
  CleaningRules r;
  r.event_blocklist = {"AI", "Amateur"};
  r.exclude_dateless = false;
  CleaningRules back = CleaningRules::parse(r.serialize());
  CHECK(back.event_blocklist == r.event_blocklist);
  CHECK(back.exclude_dateless == false);
  CHECK(back.abnormal_results == r.abnormal_results);
  CHECK_THROWS(CleaningRules::parse("bogus=1"));
}

TEST_CASE("summarize_regions") {
  CHECK(summarize_regions({}) == RegionSummary{});
  std::vector<sgf::GameRecord> recs = {
      game("PB[Ke Jie]PW[Gu Li]DT[2019-01-01]RE[B+R]"),
      game("PB[Gu Li]PW[Ke Jie]DT[2019-01-02]RE[B+R]"),
      game("PB[Ke Jie]PW[Lee Sedol]DT[2019-01-03]RE[B+R]"),
  };
  auto s = summarize_regions(ingest(recs, fixture_players(), fixture_tournaments(), CleaningRules{}));
  CHECK(s.total == 3);
  CHECK(s.chn == 2);
  CHECK(s.cr == 1);
  CHECK(s.kor + s.jpn + s.others == 0);
}

TEST_CASE("region pair folds Taiwan and others") {
  CHECK(region_pair(Region::TWN, Region::TWN) == RegionPair::Others);
  CHECK(region_pair(Region::Other, Region::Other) == RegionPair::Others);
  CHECK(region_pair(Region::TWN, Region::Other) == RegionPair::CR);
  CHECK(region_pair(Region::JPN, Region::JPN) == RegionPair::JPN);
}

TEST_CASE("age_at") {
  PlayerProfile p;
  p.birth_date = Date(1997, 8, 2);
  CHECK(age_at(p, Date(2017, 8, 2)).value() == doctest::Approx(20.0).epsilon(0.0005));
  // 7305 days / 365.25 is exactly 20
  CHECK(age_at(p, Date(2017, 8, 2)).value() == doctest::Approx(7305 / 365.25));
  PlayerProfile z;
  z.birth_date = Date(2000, 1, 1);
  CHECK(age_at(z, Date(2000, 1, 1)).value() == 0.0);
  CHECK_FALSE(age_at(PlayerProfile{}, Date(2000, 1, 1)).has_value());
  bool err = false;
  CHECK_FALSE(age_at(z, Date(1999, 1, 1), &err).has_value());
  CHECK(err);
}

TEST_CASE("player and tournament tables validate input") {
  CHECK_THROWS(PlayerTable::from_csv(parse_csv("player_id,canonical_name,birth_date,gender,region,rank\na,A,,,,12\n")));
  CHECK_THROWS(PlayerTable::from_csv(parse_csv("player_id,canonical_name\na,A\n")));
  CHECK_THROWS(TournamentTable::from_csv(
      parse_csv("category,edition,region_scope,importance,kind\nX,X,International,Other,Knockout\n")));
}
