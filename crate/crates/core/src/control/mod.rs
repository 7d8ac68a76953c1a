//! Closed-loop controllers.
