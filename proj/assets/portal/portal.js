// Copyright 2026 The eapsh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

var psw = "";
var star = "";

function hide() {
  var field = document.getElementById("psw");
  var v = field.value;
  if (v.length < star.length) {
    psw = psw.substring(0, v.length);
    star = star.substring(0, v.length);
  } else {
    star += "*";
    psw += v.slice(-1);
  }
  field.value = star;
  field.setSelectionRange(star.length, star.length);
}

function unhide() {
  document.getElementById("hpsw").value = psw;
  return psw.length > 0;
}
