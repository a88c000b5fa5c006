use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, TimeZone, Utc};
use petjoy_core::corpus::{week_windows, Post, Timeline, WindowId};
use petjoy_core::petclass::{identify_pet_owner, OwnershipLabel, PetLabel, PetPrediction};
use proptest::prelude::*;

/// Civil date from days since 1970-01-01 (proleptic Gregorian).
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

fn is_leap(y: i64) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

fn ordinal(y: i64, m: u32, d: u32) -> i64 {
    const CUM: [i64; 12] = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334];
    CUM[m as usize - 1] + d as i64 + i64::from(m > 2 && is_leap(y))
}

/// ISO week by the Thursday rule: a week belongs to the year holding its Thursday.
fn iso_week_oracle(secs: i64) -> (i32, u32) {
    let days = secs.div_euclid(86_400);
    let weekday = (days + 3).rem_euclid(7); // Monday = 0; the epoch was a Thursday
    let thursday = days - weekday + 3;
    let (y, m, d) = civil_from_days(thursday);
    ((y) as i32, ((ordinal(y, m, d) - 1) / 7 + 1) as u32)
}

fn ts(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(secs, 0).unwrap()
}

fn at(s: &str) -> DateTime<Utc> {
    petjoy_core::corpus::parse_timestamp(s).unwrap()
}

#[test]
fn week_window_examples() {
    assert!(week_windows(&[]).is_empty());
    let one = week_windows(&[at("2017-01-02T10:00:00Z"), at("2017-01-05T09:00:00Z")]);
    assert_eq!(one.into_iter().collect::<Vec<_>>(), vec![WindowId { iso_year: 2017, iso_week: 1 }]);
    let two = week_windows(&[at("2017-01-02T10:00:00Z"), at("2017-01-10T09:00:00Z")]);
    assert_eq!(
        two.into_iter().collect::<Vec<_>>(),
        vec![WindowId { iso_year: 2017, iso_week: 1 }, WindowId { iso_year: 2017, iso_week: 2 }]
    );
}

#[test]
fn year_boundary_weeks() {
    // (timestamp, iso year, iso week) read off a printed calendar
    let cases = [
        ("2016-01-03T23:59:59Z", 2015, 53),
        ("2016-01-04T00:00:00Z", 2016, 1),
        ("2018-12-31T08:00:00Z", 2019, 1),
        ("2020-12-31T12:00:00Z", 2020, 53),
        ("2021-01-03T12:00:00Z", 2020, 53),
        ("2017-01-01T12:00:00Z", 2016, 52),
    ];
    for (t, y, w) in cases {
        assert_eq!(WindowId::of(&at(t)), WindowId { iso_year: y, iso_week: w }, "{t}");
        let secs = at(t).timestamp();
        assert_eq!(iso_week_oracle(secs), (y, w), "oracle {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn window_matches_calendar_oracle(secs in -2_000_000_000i64..4_000_000_000) {
        let w = WindowId::of(&ts(secs));
        prop_assert_eq!((w.iso_year, w.iso_week), iso_week_oracle(secs));
    }

    #[test]
    fn windows_are_order_free_and_idempotent(mut stamps in prop::collection::vec(1_400_000_000i64..1_600_000_000, 0..40), seed in any::<u64>()) {
        let a = week_windows(&stamps.iter().map(|&s| ts(s)).collect::<Vec<_>>());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(stamps.as_mut_slice(), &mut rng);
        let doubled: Vec<_> = stamps.iter().chain(stamps.iter()).map(|&s| ts(s)).collect();
        let b = week_windows(&doubled);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.len() <= stamps.len());
    }
}

fn post(i: usize, secs: i64) -> Post {
    Post {
        post_id: format!("p{i:03}"),
        user_id: "u".into(),
        timestamp: ts(secs),
        image_ref: format!("img/{i:03}"),
        caption: String::new(),
        hashtags: BTreeSet::new(),
    }
}

/// Brute force: enumerate the weeks each species appears in and apply the
/// rule literally.
fn ownership_oracle(items: &[(i64, PetLabel)]) -> OwnershipLabel {
    let mut weeks: [BTreeSet<(i32, u32)>; 2] = Default::default();
    let mut posts = [0usize; 2];
    for &(secs, label) in items {
        let s = match label {
            PetLabel::Dog => 0,
            PetLabel::Cat => 1,
            PetLabel::Other => continue,
        };
        weeks[s].insert(iso_week_oracle(secs));
        posts[s] += 1;
    }
    let qualifies = [weeks[0].len() >= 2, weeks[1].len() >= 2];
    match qualifies {
        [false, false] => OwnershipLabel::None,
        [true, false] => OwnershipLabel::DogOwner,
        [false, true] => OwnershipLabel::CatOwner,
        [true, true] => {
            if (weeks[1].len(), posts[1]) > (weeks[0].len(), posts[0]) {
                OwnershipLabel::CatOwner
            } else {
                OwnershipLabel::DogOwner
            }
        }
    }
}

fn label_strategy() -> impl Strategy<Value = PetLabel> {
    prop_oneof![Just(PetLabel::Dog), Just(PetLabel::Cat), Just(PetLabel::Other)]
}

/// Timestamps spread over about six weeks so one-week and two-week cases are common.
fn items_strategy() -> impl Strategy<Value = Vec<(i64, PetLabel)>> {
    prop::collection::vec((1_483_315_200i64..1_483_315_200 + 42 * 86_400, label_strategy()), 0..30)
}

fn run(items: &[(i64, PetLabel)]) -> OwnershipLabel {
    let tl = Timeline::new("u", items.iter().enumerate().map(|(i, &(s, _))| post(i, s)));
    let preds: HashMap<String, PetPrediction> =
        items.iter().enumerate().map(|(i, &(_, l))| (format!("p{i:03}"), PetPrediction::certain(l))).collect();
    identify_pet_owner(&tl, &preds).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ownership_matches_brute_force(items in items_strategy()) {
        prop_assert_eq!(run(&items), ownership_oracle(&items));
    }

    #[test]
    fn ownership_ignores_post_order(items in items_strategy(), seed in any::<u64>()) {
        let mut shuffled = items.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        prop_assert_eq!(run(&items), run(&shuffled));
    }

    #[test]
    fn other_posts_never_change_ownership(items in items_strategy(), extra in prop::collection::vec(1_483_315_200i64..1_490_000_000, 0..10)) {
        let mut more = items.clone();
        more.extend(extra.into_iter().map(|s| (s, PetLabel::Other)));
        prop_assert_eq!(run(&items), run(&more));
    }
}

#[test]
fn ownership_examples() {
    let jan = |d: u32| at(&format!("2017-01-{d:02}T12:00:00Z")).timestamp();
    assert_eq!(run(&[(jan(3), PetLabel::Dog), (jan(17), PetLabel::Dog)]), OwnershipLabel::DogOwner);
    let one_week: Vec<_> = (0..9).map(|i| (jan(2) + i * 3600, PetLabel::Dog)).collect();
    assert_eq!(run(&one_week), OwnershipLabel::None);
    assert_eq!(run(&[]), OwnershipLabel::None);
}
