use std::io::{self, Write};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::wire::WireLine;

/// Sink for encoded lines.
pub trait AngleDevice: Send {
    fn write_line(&mut self, line: &WireLine) -> io::Result<()>;

    /// Called after a failed write, before the retry.
    fn reconnect(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl<D: AngleDevice + ?Sized> AngleDevice for Box<D> {
    fn write_line(&mut self, line: &WireLine) -> io::Result<()> {
        (**self).write_line(line)
    }

    fn reconnect(&mut self) -> io::Result<()> {
        (**self).reconnect()
    }
}

/// Serial port opened as 8N1 at the given baud rate.
pub struct SerialDevice {
    path: String,
    baud: u32,
    port: Option<Box<dyn serialport::SerialPort>>,
}

impl SerialDevice {
    pub const DEFAULT_BAUD: u32 = 115_200;

    pub fn open(path: &str, baud: u32) -> io::Result<Self> {
        let mut dev = SerialDevice {
            path: path.to_owned(),
            baud,
            port: None,
        };
        dev.reconnect()?;
        Ok(dev)
    }

    pub fn path(&self) -> &str {
        &self.path
    }
}

impl std::fmt::Debug for SerialDevice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SerialDevice")
            .field("path", &self.path)
            .field("baud", &self.baud)
            .field("open", &self.port.is_some())
            .finish()
    }
}

impl AngleDevice for SerialDevice {
    fn write_line(&mut self, line: &WireLine) -> io::Result<()> {
        let port = self
            .port
            .as_mut()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotConnected, "serial port is closed"))?;
        let result = port.write_all(line.as_bytes()).and_then(|_| port.flush());
        if result.is_err() {
            self.port = None;
        }
        result
    }

    fn reconnect(&mut self) -> io::Result<()> {
        self.port = None;
        let port = serialport::new(&self.path, self.baud)
            .data_bits(serialport::DataBits::Eight)
            .parity(serialport::Parity::None)
            .stop_bits(serialport::StopBits::One)
            .timeout(Duration::from_millis(100))
            .open()
            .map_err(io::Error::from)?;
        self.port = Some(port);
        Ok(())
    }
}

/// Writes lines to any byte sink, e.g. a file or a pty.
#[derive(Debug)]
pub struct StreamDevice<W> {
    inner: W,
}

impl<W: Write + Send> StreamDevice<W> {
    pub fn new(inner: W) -> Self {
        StreamDevice { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write + Send> AngleDevice for StreamDevice<W> {
    fn write_line(&mut self, line: &WireLine) -> io::Result<()> {
        self.inner.write_all(line.as_bytes())?;
        self.inner.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedLine {
    pub at: Instant,
    pub line: String,
}

#[derive(Debug, Default)]
struct MockState {
    lines: Vec<CapturedLine>,
    fail_next: usize,
    fail_forever: bool,
    write_attempts: usize,
    reconnects: usize,
    stall: Option<Duration>,
}

/// In-memory device for tests. Failures and stalls can be scripted through the device, and the
/// paired [`MockCapture`] reads what was written from another thread.
#[derive(Debug, Clone, Default)]
pub struct MockDevice {
    state: Arc<Mutex<MockState>>,
}

#[derive(Debug, Clone)]
pub struct MockCapture {
    state: Arc<Mutex<MockState>>,
}

impl MockDevice {
    pub fn new() -> (MockDevice, MockCapture) {
        let dev = MockDevice::default();
        let cap = MockCapture {
            state: Arc::clone(&dev.state),
        };
        (dev, cap)
    }

    fn with<R>(&self, f: impl FnOnce(&mut MockState) -> R) -> R {
        f(&mut self.state.lock().unwrap_or_else(|p| p.into_inner()))
    }

    /// The next `n` writes fail with `BrokenPipe`.
    pub fn fail_next(self, n: usize) -> Self {
        self.with(|s| s.fail_next = n);
        self
    }

    pub fn fail_forever(self) -> Self {
        self.with(|s| s.fail_forever = true);
        self
    }

    /// Every successful write blocks for `d` first.
    pub fn stall(self, d: Duration) -> Self {
        self.with(|s| s.stall = Some(d));
        self
    }
}

impl AngleDevice for MockDevice {
    fn write_line(&mut self, line: &WireLine) -> io::Result<()> {
        let stall = self.with(|s| {
            s.write_attempts += 1;
            if s.fail_forever || s.fail_next > 0 {
                s.fail_next = s.fail_next.saturating_sub(1);
                Err(io::Error::new(io::ErrorKind::BrokenPipe, "scripted failure"))
            } else {
                Ok(s.stall)
            }
        })?;
        if let Some(d) = stall {
            std::thread::sleep(d);
        }
        self.with(|s| {
            s.lines.push(CapturedLine {
                at: Instant::now(),
                line: line.as_str().to_owned(),
            })
        });
        Ok(())
    }

    fn reconnect(&mut self) -> io::Result<()> {
        self.with(|s| s.reconnects += 1);
        Ok(())
    }
}

impl MockCapture {
    fn with<R>(&self, f: impl FnOnce(&MockState) -> R) -> R {
        f(&self.state.lock().unwrap_or_else(|p| p.into_inner()))
    }

    pub fn lines(&self) -> Vec<CapturedLine> {
        self.with(|s| s.lines.clone())
    }

    pub fn text(&self) -> String {
        self.with(|s| s.lines.iter().map(|l| l.line.as_str()).collect())
    }

    pub fn write_attempts(&self) -> usize {
        self.with(|s| s.write_attempts)
    }

    pub fn reconnects(&self) -> usize {
        self.with(|s| s.reconnects)
    }
}
