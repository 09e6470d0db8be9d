mod common;

use common::prompts;
use logitext::oracle::{build_propose_prompt, build_verify_prompt, PROPOSE_SYSTEM, VERIFY_SYSTEM};

fn golden(name: &str) -> String {
    common::read_fixture(&format!("prompts/{name}"))
}

#[test]
fn system_prompts() {
    assert_eq!(PROPOSE_SYSTEM, golden("propose.system.txt"));
    assert_eq!(VERIFY_SYSTEM, golden("verify.system.txt"));
    assert_eq!(build_propose_prompt(&prompts::fresh()).system, PROPOSE_SYSTEM);
    assert_eq!(build_verify_prompt(&prompts::verify()).system, VERIFY_SYSTEM);
}

#[test]
fn fresh_propose_prompt() {
    assert_eq!(
        build_propose_prompt(&prompts::fresh()).user,
        golden("propose_fresh.user.txt")
    );
}

#[test]
fn refine_propose_prompt() {
    let user = build_propose_prompt(&prompts::refine()).user;
    assert_eq!(user, golden("propose_refine.user.txt"));
    assert!(user.contains("If some constraints previously failed, focus on satisfying them now:\n"));
}

#[test]
fn verify_prompt() {
    let user = build_verify_prompt(&prompts::verify()).user;
    assert_eq!(user, golden("verify.user.txt"));
    assert!(user.contains("Return ONLY valid JSON array, nothing else."));
    assert!(user.contains(r#"He said \"\"\"hello\"\"\" twice."#));
}
