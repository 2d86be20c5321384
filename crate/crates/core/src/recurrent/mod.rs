//! Recurrent sequence heads: echo-state network and bidirectional LSTM.

pub mod esn;
pub mod lstm;

pub use esn::{
    esn_fit_readout, esn_init, esn_run, esn_states, spectral_radius, train_esn, EsnConfig,
    EsnModel, EsnReadout, EsnReservoir,
};
pub use lstm::{bilstm_backward, bilstm_forward, BiLstmConfig, LstmCellParams, LstmForward, LstmParams, LstmReadout};
