use std::fmt;

/// Reduction rule names as they appear in traces and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    // Administrative, shared by C and OCaml.
    Var,
    Arith1,
    Arith2,
    Arith3,
    App1,
    App2,
    App3,
    Resume1,
    Resume2,
    Perform,
    Raise,
    // C.
    CallC,
    Callback,
    RetToO,
    ExnFwdO,
    // OCaml.
    CallO,
    ExtCall,
    RetToC,
    RetFib,
    Handle,
    ExnHn,
    ExnFwdC,
    ExnFwdFib,
    EffHn,
    EffFwd,
    EffUnHn,
    Resume,
    // Builtins, either side.
    CallPrim,
    // Linked exception frames for exception-only handlers.
    TrapPush,
    TrapRet,
    TrapHn,
    TrapFwd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleGroup {
    Admin,
    C,
    OCaml,
    Builtin,
    Trap,
}

impl Rule {
    pub const ALL: [Rule; 32] = [
        Rule::Var,
        Rule::Arith1,
        Rule::Arith2,
        Rule::Arith3,
        Rule::App1,
        Rule::App2,
        Rule::App3,
        Rule::Resume1,
        Rule::Resume2,
        Rule::Perform,
        Rule::Raise,
        Rule::CallC,
        Rule::Callback,
        Rule::RetToO,
        Rule::ExnFwdO,
        Rule::CallO,
        Rule::ExtCall,
        Rule::RetToC,
        Rule::RetFib,
        Rule::Handle,
        Rule::ExnHn,
        Rule::ExnFwdC,
        Rule::ExnFwdFib,
        Rule::EffHn,
        Rule::EffFwd,
        Rule::EffUnHn,
        Rule::Resume,
        Rule::CallPrim,
        Rule::TrapPush,
        Rule::TrapRet,
        Rule::TrapHn,
        Rule::TrapFwd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Var => "Var",
            Rule::Arith1 => "Arith1",
            Rule::Arith2 => "Arith2",
            Rule::Arith3 => "Arith3",
            Rule::App1 => "App1",
            Rule::App2 => "App2",
            Rule::App3 => "App3",
            Rule::Resume1 => "Resume1",
            Rule::Resume2 => "Resume2",
            Rule::Perform => "Perform",
            Rule::Raise => "Raise",
            Rule::CallC => "CallC",
            Rule::Callback => "Callback",
            Rule::RetToO => "RetToO",
            Rule::ExnFwdO => "ExnFwdO",
            Rule::CallO => "CallO",
            Rule::ExtCall => "ExtCall",
            Rule::RetToC => "RetToC",
            Rule::RetFib => "RetFib",
            Rule::Handle => "Handle",
            Rule::ExnHn => "ExnHn",
            Rule::ExnFwdC => "ExnFwdC",
            Rule::ExnFwdFib => "ExnFwdFib",
            Rule::EffHn => "EffHn",
            Rule::EffFwd => "EffFwd",
            Rule::EffUnHn => "EffUnHn",
            Rule::Resume => "Resume",
            Rule::CallPrim => "CallPrim",
            Rule::TrapPush => "TrapPush",
            Rule::TrapRet => "TrapRet",
            Rule::TrapHn => "TrapHn",
            Rule::TrapFwd => "TrapFwd",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }

    pub fn group(self) -> RuleGroup {
        use Rule::*;
        match self {
            Var | Arith1 | Arith2 | Arith3 | App1 | App2 | App3 | Resume1 | Resume2 | Perform
            | Raise => RuleGroup::Admin,
            CallC | Callback | RetToO | ExnFwdO => RuleGroup::C,
            CallPrim => RuleGroup::Builtin,
            TrapPush | TrapRet | TrapHn | TrapFwd => RuleGroup::Trap,
            _ => RuleGroup::OCaml,
        }
    }

    /// Rules after which the executing fiber's red zone is checked, the
    /// analogue of a function prologue.
    pub fn is_checked_point(self) -> bool {
        matches!(
            self,
            Rule::CallO | Rule::Handle | Rule::TrapPush | Rule::Resume
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
