//! Test-script templates carried by reports whose repair took a shortcut.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::config::WorkaroundKind;

/// Case names of a family's suite, in order.
pub fn case_names(family_id: &str, suite_size: u32) -> Vec<String> {
    const VERBS: [&str; 4] = ["loads the view", "applies the filter", "opens the details", "refreshes the list"];
    (0..suite_size as usize)
        .map(|i| match VERBS.get(i) {
            Some(verb) => format!("{family_id} {verb}"),
            None => format!("{family_id} scenario {}", i + 1),
        })
        .collect()
}

fn case_body(family_id: &str, name: &str, index: usize) -> String {
    format!(
        "test('{name}', async ({{ page }}) => {{\n  await page.goto('/app/{family_id}');\n  const rows = page.locator('[data-test=row-{index}]');\n  await expect(rows.first()).toBeVisible();\n  expect(await rows.count()).toBeGreaterThan(0);\n}});\n"
    )
}

fn header() -> &'static str {
    "import { test, expect } from '@playwright/test';\n\n"
}

/// A suite whose first case asserts an exact count.
fn exact_suite(family_id: &str, suite_size: u32, matcher: &str) -> String {
    let names = case_names(family_id, suite_size);
    let mut out = String::from(header());
    for (i, name) in names.iter().enumerate() {
        if i == 0 {
            out.push_str(&format!(
                "test('{name}', async ({{ page }}) => {{\n  await page.goto('/app/{family_id}');\n  const value = await page.locator('[data-test=result-count]').count();\n  expect(value).{matcher};\n}});\n"
            ));
        } else {
            out.push_str(&case_body(family_id, name, i));
        }
        if i + 1 < names.len() {
            out.push('\n');
        }
    }
    out
}

/// `(before, after)` scripts for a workaround. Weakening relaxes the exact
/// `toBe(5)` to `toBeTruthy()`; deletion drops the last case.
pub fn workaround_scripts(kind: WorkaroundKind, family_id: &str, suite_size: u32) -> (String, String) {
    match kind {
        WorkaroundKind::WeakenAssertion => (
            exact_suite(family_id, suite_size, "toBe(5)"),
            exact_suite(family_id, suite_size, "toBeTruthy()"),
        ),
        WorkaroundKind::DeleteCase => (
            exact_suite(family_id, suite_size, "toBe(5)"),
            exact_suite(family_id, suite_size.saturating_sub(1).max(1), "toBe(5)"),
        ),
    }
}
