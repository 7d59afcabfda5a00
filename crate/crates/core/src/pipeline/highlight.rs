use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::attribution::{merge_subwords, Attribution};
use crate::corpus::{Document, Granularity};
use crate::error::{Error, Result};

/// A rendered highlight page and the token positions it marks.
#[derive(Debug, Clone, PartialEq)]
pub struct Highlight {
    pub html: String,
    pub highlighted: BTreeSet<usize>,
    /// Token budget B = floor(budget% · T), counted on the original tokens.
    pub token_budget: usize,
}

/// floor(percent/100 · n), robust to the rounding of exact products.
pub fn token_budget(percent: f64, n: usize) -> usize {
    (percent * n as f64 / 100.0 + 1e-9).floor() as usize
}

/// Picks the tokens to highlight: features in decreasing φ (ties to the lower
/// index) are taken whole while they fit in the remaining budget; the first
/// one that does not fit contributes its leading tokens up to the budget.
pub fn select_highlight(attribution: &Attribution, budget: usize) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..attribution.len()).collect();
    order.sort_by(|&a, &b| {
        attribution.values[b]
            .total_cmp(&attribution.values[a])
            .then(a.cmp(&b))
    });
    let mut remaining = budget;
    let mut chosen = BTreeSet::new();
    for f in order {
        if remaining == 0 {
            break;
        }
        let group = attribution.partition.groups()[f].clone();
        let take = group.len().min(remaining);
        chosen.extend(group.start..group.start + take);
        remaining -= take;
    }
    chosen
}

fn escape(text: &str, out: &mut String) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
}

/// Renders a self-contained HTML page highlighting the top `budget_percent`
/// of the document's tokens. Token attributions are first merged to words.
pub fn export_highlights(document: &Document, attribution: &Attribution, budget_percent: f64) -> Result<Highlight> {
    if !(budget_percent > 0.0 && budget_percent <= 100.0) {
        return Err(Error::Config(format!("highlight budget {budget_percent} is outside (0, 100]")));
    }
    if attribution.doc_id != document.id || attribution.partition.num_tokens() != document.len() {
        return Err(Error::Mismatch(format!(
            "attribution for {} does not match document {}",
            attribution.doc_id, document.id
        )));
    }
    let shown = if attribution.granularity() == Granularity::Token {
        merge_subwords(attribution, &document.word_of_token)?
    } else {
        attribution.clone()
    };
    let budget = token_budget(budget_percent, document.len());
    let highlighted = select_highlight(&shown, budget);

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    let meta = [
        ("doc-id", document.id.clone()),
        ("method", attribution.method.to_string()),
        ("granularity", attribution.granularity().to_string()),
        ("seed", attribution.seed.to_string()),
        ("budget-percent", budget_percent.to_string()),
        ("token-budget", budget.to_string()),
        ("budget-unit", "tokens before subword merging".to_string()),
    ];
    for (name, content) in &meta {
        html.push_str("<meta name=\"");
        html.push_str(name);
        html.push_str("\" content=\"");
        escape(content, &mut html);
        html.push_str("\">\n");
    }
    html.push_str("<title>");
    escape(&document.id, &mut html);
    html.push_str("</title>\n<style>mark { background: #ffd54f; }</style>\n</head>\n<body>\n<header>\n<dl>\n");
    for (name, content) in &meta {
        html.push_str("<dt>");
        html.push_str(name);
        html.push_str("</dt><dd>");
        escape(content, &mut html);
        html.push_str("</dd>\n");
    }
    html.push_str("</dl>\n</header>\n<p>");
    let text = &document.raw_text;
    let mut cursor = 0;
    for (i, span) in document.token_spans.iter().enumerate() {
        escape(&text[cursor..span.start], &mut html);
        if highlighted.contains(&i) {
            write!(html, "<mark data-tok=\"{i}\">").unwrap();
            escape(&text[span.clone()], &mut html);
            html.push_str("</mark>");
        } else {
            escape(&text[span.clone()], &mut html);
        }
        cursor = span.end;
    }
    escape(&text[cursor..], &mut html);
    html.push_str("</p>\n</body>\n</html>\n");
    Ok(Highlight {
        html,
        highlighted,
        token_budget: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::Method;
    use crate::corpus::make_partition;

    fn attribution(doc: &Document, granularity: Granularity, values: Vec<f64>) -> Attribution {
        Attribution {
            doc_id: doc.id.clone(),
            partition: make_partition(doc, granularity).unwrap(),
            values,
            phi0: 0.0,
            target_class: 0,
            method: Method::ShapDirect,
            seed: 7,
            budget_or_steps: 0,
        }
    }

    fn fifty_token_doc() -> Document {
        let bounds = vec![0..8, 8..20, 20..35, 35..50];
        Document::from_token_ids("d", (2..52).collect(), bounds, 0).unwrap()
    }

    #[test]
    fn overflowing_sentence_keeps_leading_tokens() {
        let doc = fifty_token_doc();
        let a = attribution(&doc, Granularity::Sentence, vec![0.9, 0.1, 0.2, 0.3]);
        let h = export_highlights(&doc, &a, 10.0).unwrap();
        assert_eq!(h.token_budget, 5);
        assert_eq!(h.highlighted, (0..5).collect());
        assert_eq!(h.html.matches("<mark ").count(), 5);
        assert!(h.html.contains("content=\"shap_direct\""));
        assert!(h.html.contains("content=\"7\""));
    }

    #[test]
    fn whole_document_at_full_budget() {
        let doc = fifty_token_doc();
        let a = attribution(&doc, Granularity::Sentence, vec![-1.0, 0.5, 0.0, 2.0]);
        let h = export_highlights(&doc, &a, 100.0).unwrap();
        assert_eq!(h.highlighted.len(), 50);
    }

    #[test]
    fn token_granularity_highlights_b_words() {
        let doc = fifty_token_doc();
        let values: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64).collect();
        let a = attribution(&doc, Granularity::Token, values.clone());
        let h = export_highlights(&doc, &a, 10.0).unwrap();
        let mut top: Vec<usize> = (0..50).collect();
        top.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
        assert_eq!(h.highlighted, top[..5].iter().copied().collect());
    }

    #[test]
    fn whole_features_fit_before_truncation() {
        let doc = fifty_token_doc();
        // sentence 0 (8 tokens) fits a 10-token budget, sentence 1 is cut to 2
        let a = attribution(&doc, Granularity::Sentence, vec![0.9, 0.8, 0.1, 0.0]);
        let h = export_highlights(&doc, &a, 20.0).unwrap();
        assert_eq!(h.highlighted, (0..10).collect());
    }

    #[test]
    fn escapes_text() {
        let doc = Document::from_token_ids("<d>", vec![2, 3], vec![0..2], 0).unwrap();
        let a = attribution(&doc, Granularity::Token, vec![1.0, 0.0]);
        let h = export_highlights(&doc, &a, 50.0).unwrap();
        assert!(h.html.contains("&lt;d&gt;"));
        assert!(!h.html.contains("<d>"));
    }
}
