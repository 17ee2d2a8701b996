//! Experiment-frame observer: counts messages on `arrived` and `solved`
//! during an observation window, then emits a summary record on `report` and
//! passivates.
//!
//! The report goes out one zero-delay event after the window closes, so an
//! arrival landing exactly on the window boundary is still counted (the
//! confluent transition folds it in before the report fires).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atomic::AtomicBehavior;
use crate::catalog::{params, BehaviorCatalog, BehaviorParts, ParamKind, ParamSpec};
use crate::error::BehaviorError;
use crate::message::{Bag, Message};
use crate::time::SimTime;
use crate::value::{StateValue, Value, ValueTypeTag};

use super::{get_int, get_real, get_text};

pub struct TransducerBehavior {
    pub window: f64,
}

impl TransducerBehavior {
    fn initial_state(window: f64) -> StateValue {
        StateValue::new([
            ("phase".to_owned(), Value::Text("observing".into())),
            ("sigma".to_owned(), Value::Real(window)),
            ("arrived".to_owned(), Value::Integer(0)),
            ("solved".to_owned(), Value::Integer(0)),
        ])
    }

    fn count_bag(state: &StateValue, input: &Bag) -> Result<StateValue, BehaviorError> {
        let arrived = get_int(state, "arrived")? + input.on_port("arrived").count() as i64;
        let solved = get_int(state, "solved")? + input.on_port("solved").count() as i64;
        Ok(state
            .with_field("arrived", Value::Integer(arrived))
            .with_field("solved", Value::Integer(solved)))
    }

    pub fn report_type() -> ValueTypeTag {
        ValueTypeTag::record([
            ("arrived".to_owned(), ValueTypeTag::Integer),
            ("solved".to_owned(), ValueTypeTag::Integer),
            ("throughput".to_owned(), ValueTypeTag::Real),
        ])
    }
}

impl AtomicBehavior for TransducerBehavior {
    fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
        match get_text(state, "phase")? {
            "observing" => Ok(state
                .with_field("phase", Value::Text("reporting".into()))
                .with_field("sigma", Value::Real(0.0))),
            "reporting" => Ok(state.with_field("phase", Value::Text("done".into()))),
            other => Err(BehaviorError::State(format!("internal event in phase `{other}`"))),
        }
    }

    fn delta_ext(
        &self,
        state: &StateValue,
        elapsed: SimTime,
        input: &Bag,
    ) -> Result<StateValue, BehaviorError> {
        match get_text(state, "phase")? {
            "observing" => {
                let sigma = get_real(state, "sigma")?;
                let e = elapsed.value().unwrap_or(0.0);
                let state = state.with_field("sigma", Value::Real(sigma - e));
                Self::count_bag(&state, input)
            }
            // After the window, traffic is ignored.
            _ => Ok(state.clone()),
        }
    }

    fn delta_con(&self, state: &StateValue, input: &Bag) -> Result<StateValue, BehaviorError> {
        match get_text(state, "phase")? {
            // Boundary collision: count the bag, then close the window.
            "observing" => Ok(Self::count_bag(state, input)?
                .with_field("phase", Value::Text("reporting".into()))
                .with_field("sigma", Value::Real(0.0))),
            _ => {
                let after = self.delta_int(state)?;
                self.delta_ext(&after, SimTime::ZERO, input)
            }
        }
    }

    fn lambda(&self, state: &StateValue) -> Result<Bag, BehaviorError> {
        if get_text(state, "phase")? != "reporting" {
            return Ok(Bag::new());
        }
        let arrived = get_int(state, "arrived")?;
        let solved = get_int(state, "solved")?;
        let report = Value::record([
            ("arrived".to_owned(), Value::Integer(arrived)),
            ("solved".to_owned(), Value::Integer(solved)),
            ("throughput".to_owned(), Value::Real(solved as f64 / self.window)),
        ]);
        Ok(Bag::of([Message::new("report", report)]))
    }

    fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError> {
        match get_text(state, "phase")? {
            "observing" => SimTime::finite(get_real(state, "sigma")?)
                .map_err(|e| BehaviorError::State(e.to_string())),
            "reporting" => Ok(SimTime::ZERO),
            _ => Ok(SimTime::INFINITY),
        }
    }

    fn observables(&self, state: &StateValue) -> BTreeMap<String, Value> {
        let mut map = BTreeMap::new();
        if let Some(v) = state.field("arrived") {
            map.insert("arrived".to_owned(), v.clone());
        }
        if let Some(v) = state.field("solved") {
            map.insert("solved".to_owned(), v.clone());
        }
        map
    }
}

pub(super) fn register(catalog: &mut BehaviorCatalog) {
    catalog.register_behavior(
        "transducer",
        vec![
            ParamSpec::required("observation_window", ParamKind::Time),
            ParamSpec::optional("job_type", ParamKind::Type),
        ],
        |p| {
            let window = params::time_finite_positive(p, "observation_window")?;
            let job_type = params::type_or(p, "job_type", ValueTypeTag::Integer);
            let window_value = window.value().expect("checked finite");
            Ok(BehaviorParts {
                input_ports: BTreeMap::from([
                    ("arrived".to_owned(), job_type.clone()),
                    ("solved".to_owned(), job_type),
                ]),
                output_ports: BTreeMap::from([(
                    "report".to_owned(),
                    TransducerBehavior::report_type(),
                )]),
                behavior: Arc::new(TransducerBehavior { window: window_value }),
                initial_state: TransducerBehavior::initial_state(window_value),
            })
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::AtomicProcessor;
    use crate::model::{AtomicModelSpec, Mode, ParamMap, ParamValue};
    use crate::path::ModelPath;

    fn make(window: i64) -> AtomicProcessor {
        let catalog = BehaviorCatalog::standard();
        let spec = catalog
            .make(&AtomicModelSpec::new(
                "transducer",
                ParamMap::from([(
                    "observation_window".to_owned(),
                    ParamValue::Value(Value::Integer(window)),
                )]),
            ))
            .unwrap();
        let mut p = AtomicProcessor::new(ModelPath::parse("/trans").unwrap(), spec);
        p.init(SimTime::ZERO).unwrap();
        p
    }

    fn deliver(p: &mut AtomicProcessor, t: f64, port: &str) {
        let bag = Bag::of([Message::new(port, Value::Integer(1))]);
        p.transition(SimTime::finite(t).unwrap(), &bag, Mode::Parallel, 100).unwrap();
    }

    fn report_of(p: &AtomicProcessor, t: f64) -> Value {
        let bag = p.collect_output(SimTime::finite(t).unwrap()).unwrap();
        let report = bag.on_port("report").next().unwrap().value.clone();
        report
    }

    #[test]
    fn empty_window_reports_zeroes() {
        let mut p = make(10);
        p.transition(SimTime::finite(10.0).unwrap(), &Bag::new(), Mode::Parallel, 100).unwrap();
        let report = report_of(&p, 10.0);
        let fields = report.as_record().unwrap();
        assert_eq!(fields["arrived"], Value::Integer(0));
        assert_eq!(fields["solved"], Value::Integer(0));
        assert_eq!(fields["throughput"], Value::Real(0.0));
    }

    #[test]
    fn counts_and_throughput() {
        // Oracle: 5 arrivals (last exactly at the boundary), 4 solved within
        // the window -> {5, 4, 0.4}.
        let mut p = make(10);
        for (t, port) in [
            (2.0, "arrived"),
            (3.0, "solved"),
            (4.0, "arrived"),
            (5.0, "solved"),
            (6.0, "arrived"),
            (7.0, "solved"),
            (8.0, "arrived"),
            (9.0, "solved"),
        ] {
            deliver(&mut p, t, port);
        }
        // boundary collision at t = 10
        let bag = Bag::of([Message::new("arrived", Value::Integer(1))]);
        p.transition(SimTime::finite(10.0).unwrap(), &bag, Mode::Parallel, 100).unwrap();
        assert_eq!(p.t_next(), SimTime::finite(10.0).unwrap());
        let report = report_of(&p, 10.0);
        let fields = report.as_record().unwrap();
        assert_eq!(fields["arrived"], Value::Integer(5));
        assert_eq!(fields["solved"], Value::Integer(4));
        assert_eq!(fields["throughput"], Value::Real(0.4));
        // after reporting, passive and deaf
        p.transition(SimTime::finite(10.0).unwrap(), &Bag::new(), Mode::Parallel, 100).unwrap();
        assert_eq!(p.t_next(), SimTime::INFINITY);
        deliver(&mut p, 11.0, "solved");
        assert_eq!(p.state().field("solved"), Some(&Value::Integer(4)));
        assert_eq!(p.t_next(), SimTime::INFINITY);
    }
}
