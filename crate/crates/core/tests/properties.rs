mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use longif::expansion::InstructionTemplate;
use longif::harness::gold_response;
use longif::metrics::ifs;
use longif::scoring::{score_item, score_quantity, ItemView, Rubric};
use longif::taskgen::{BenchmarkItem, TemplateSet};
use longif::tokenizer::default_tokenizer;

fn items() -> &'static [BenchmarkItem] {
    static ITEMS: OnceLock<Vec<BenchmarkItem>> = OnceLock::new();
    ITEMS.get_or_init(|| common::generate(23, common::small_plan(&["4k"], 1, 3)))
}

/// Near-misses of an answer: JSON-ish fragments and edits of the gold text.
fn response_strategy() -> impl Strategy<Value = (usize, String)> {
    let n = items().len();
    (0..n).prop_flat_map(|i| {
        let gold = gold_response(&items()[i]);
        let len = gold.chars().count();
        let edited = (0..=len, 0..=len, "[\\[\\]{}\":, a-z0-9]{0,6}").prop_map(move |(a, b, ins)| {
            let (lo, hi) = (a.min(b), a.max(b));
            let chars: Vec<char> = gold.chars().collect();
            let mut s: String = chars[..lo].iter().collect();
            s.push_str(&ins);
            s.extend(&chars[hi..]);
            s
        });
        let text = prop_oneof![
            edited,
            ".{0,200}",
            "[\\[\\]{}\":, A-Za-z0-9\n-]{0,120}",
            Just(String::new()),
        ];
        (Just(i), text)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn truncation_is_a_bounded_idempotent_prefix(text in "(.|\n){0,400}", n in 0usize..120) {
        let tok = default_tokenizer();
        let cut = tok.truncate_right(&text, n);
        prop_assert!(text.starts_with(cut));
        prop_assert!(tok.count(cut) <= n);
        prop_assert_eq!(tok.truncate_right(cut, n), cut);
        if tok.count(&text) <= n {
            prop_assert_eq!(cut, text.as_str());
        }
    }

    #[test]
    fn quantity_falls_as_counts_diverge(gold in 1usize..30, a in 0usize..80, b in 0usize..80, w in 1u32..20) {
        let w = w as f64;
        let da = a.abs_diff(gold);
        let db = b.abs_diff(gold);
        let (sa, sb) = (score_quantity(a, gold, w), score_quantity(b, gold, w));
        prop_assert!((0.0..=w).contains(&sa));
        if da <= db {
            prop_assert!(sa >= sb);
        }
        prop_assert_eq!(score_quantity(gold, gold, w), w);
        if a != gold {
            prop_assert!(sa < w);
        }
    }

    #[test]
    fn ifs_is_scale_invariant(ys in prop::collection::vec(0.01f64..1.0, 2..12), k in 0.05f64..50.0) {
        let base = ifs(&ys).value.unwrap();
        let scaled: Vec<f64> = ys.iter().map(|y| y * k).collect();
        let s = ifs(&scaled).value.unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!((base - s).abs() <= 1e-9 * base.max(1.0), "{base} vs {s}");
    }

    #[test]
    fn evaluators_are_total_and_bounded((i, response) in response_strategy()) {
        static RUBRIC: OnceLock<Rubric> = OnceLock::new();
        let rubric = RUBRIC.get_or_init(Rubric::builtin);
        let item = &items()[i];
        let view = ItemView::new(item).unwrap();
        let points = score_item(rubric, &view, Some(&response)).unwrap();
        prop_assert_eq!(points.len(), rubric.task(item.task_id).points.len());
        for p in points {
            prop_assert!(p.achieved.is_finite());
            prop_assert!(p.achieved >= 0.0 && p.achieved <= p.weight, "{} {} of {}", p.point_id, p.achieved, p.weight);
        }
    }

    #[test]
    fn rendering_resolves_every_placeholder(i in 0usize..1000, e in 0usize..1000) {
        let item = &items()[i % items().len()];
        let set = TemplateSet::builtin();
        let templates: &[InstructionTemplate] = set.for_task(item.task_id);
        let t = &templates[e % templates.len()];
        let out = t.render(&item.variable_assignment).unwrap();
        // the only braces left are the template's escaped literals
        let literal_open = t.text.matches("{{").count();
        let literal_close = t.text.matches("}}").count();
        prop_assert_eq!(out.matches('{').count(), literal_open);
        prop_assert_eq!(out.matches('}').count(), literal_close);
        for p in &t.placeholders {
            let token = format!("{{{p}}}");
            prop_assert!(!out.contains(&token));
        }
    }
}

#[test]
fn stored_instructions_match_their_templates() {
    let set = TemplateSet::builtin();
    for item in items() {
        let t = &set.for_task(item.task_id)[item.expression_index];
        assert_eq!(t.render(&item.variable_assignment).unwrap(), item.instruction);
    }
}
